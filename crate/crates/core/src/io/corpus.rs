//! SEQ1: a set of equal-shape `L × width` sequences.
//!
//! ```text
//! 0   magic "SEQ1"
//! 4   version (u32, = 1)
//! 8   count (u32)
//! 12  length L (u32)
//! 16  width (u32)
//! 20  f32 [sequence][frame][channel]
//! ```

use std::path::Path;

use super::binary::{put_f32s, put_u32, to_u32, Reader};
use super::{read_bytes, write_bytes};
use crate::error::{Error, FormatError, Result};
use crate::numerics::Tensor;
use crate::toymodel::SyntheticCorpus;

pub const SEQ_MAGIC: [u8; 4] = *b"SEQ1";
pub const SEQ_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

pub fn encode_corpus(corpus: &SyntheticCorpus<f32>) -> Result<Vec<u8>> {
    let seqs = corpus.sequences();
    let shape = seqs[0].shape().to_vec();
    if seqs.iter().any(|s| s.shape() != shape.as_slice()) {
        return Err(Error::Validation("SEQ1 requires sequences of equal length".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * seqs.len() * seqs[0].len());
    out.extend_from_slice(&SEQ_MAGIC);
    put_u32(&mut out, SEQ_VERSION);
    put_u32(&mut out, to_u32(seqs.len(), "count")?);
    put_u32(&mut out, to_u32(shape[0], "length")?);
    put_u32(&mut out, to_u32(shape[1], "width")?);
    for s in seqs {
        put_f32s(&mut out, s.data().iter().copied());
    }
    Ok(out)
}

pub fn decode_corpus(bytes: &[u8]) -> Result<SyntheticCorpus<f32>> {
    let mut rd = Reader::new(bytes);
    rd.magic(SEQ_MAGIC)?;
    let version = rd.u32(HEADER_LEN)?;
    if version != SEQ_VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: version,
            supported: SEQ_VERSION,
            offset: 4,
        }
        .into());
    }
    let count = rd.u32(HEADER_LEN)? as usize;
    let len = rd.u32(HEADER_LEN)? as usize;
    let width = rd.u32(HEADER_LEN)? as usize;
    for (field, offset, v) in [("count", 8, count), ("length", 12, len), ("width", 16, width)] {
        if v == 0 {
            return Err(FormatError::InvalidHeader {
                field,
                offset,
                reason: "must be ≥ 1".into(),
            }
            .into());
        }
    }
    let expected = count
        .checked_mul(len)
        .and_then(|n| n.checked_mul(width))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| FormatError::InvalidHeader {
            field: "count",
            offset: 8,
            reason: "payload size overflows".into(),
        })?;
    if bytes.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            actual: bytes.len(),
        }
        .into());
    }
    if bytes.len() > expected {
        return Err(FormatError::SizeMismatch {
            expected,
            actual: bytes.len(),
        }
        .into());
    }
    let seqs = (0..count)
        .map(|_| Tensor::from_vec(&[len, width], rd.f32s(len * width)))
        .collect::<Result<Vec<_>>>()?;
    SyntheticCorpus::from_sequences(seqs)
}

pub fn write_corpus(corpus: &SyntheticCorpus<f32>, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_corpus(corpus)?)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<SyntheticCorpus<f32>> {
    decode_corpus(&read_bytes(path.as_ref())?)
}
