//! ATN1: per-block attention dumps.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ATN1"
//! 4       4     version (u32, = 1)
//! 8       4     n_blocks (u32)
//! 12      4     n_heads (u32)
//! 16      4     length L (u32)
//! 20      4     flags (u32; bit 0 = per-head matrices present)
//! 24      ...   if bit 0: f32 [block][head][query][key]
//!               then always: f32 [block][query][key] mean matrices
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::binary::{put_f32s, put_u32, to_u32, Reader};
use super::{read_bytes, write_bytes};
use crate::attention::{AttentionMap, AttentionRecord};
use crate::error::{Error, FormatError, Result};
use crate::numerics::Tensor;

pub const ATN_MAGIC: [u8; 4] = *b"ATN1";
pub const ATN_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;
const FLAG_PER_HEAD: u32 = 1;
const ROW_TOL: f64 = 1e-4;
const MEAN_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtnHeader {
    pub version: u32,
    pub n_blocks: u32,
    pub n_heads: u32,
    pub len: u32,
    pub flags: u32,
}

impl AtnHeader {
    pub fn has_per_head(&self) -> bool {
        self.flags & FLAG_PER_HEAD != 0
    }

    fn payload_floats(&self) -> Option<usize> {
        let l2 = (self.len as usize).checked_mul(self.len as usize)?;
        let mean = (self.n_blocks as usize).checked_mul(l2)?;
        let heads = if self.has_per_head() {
            mean.checked_mul(self.n_heads as usize)?
        } else {
            0
        };
        heads.checked_add(mean)
    }
}

/// Non-fatal findings of the reader.
#[derive(Debug, Clone, PartialEq)]
pub enum AtnWarning {
    RowSum {
        block: usize,
        head: Option<usize>,
        row: usize,
        sum: f64,
    },
    MeanMismatch {
        block: usize,
        max_abs: f64,
    },
}

#[derive(Debug, Clone)]
pub struct AtnDump {
    pub header: AtnHeader,
    pub records: Vec<AttentionRecord<f32>>,
    pub warnings: Vec<AtnWarning>,
}

pub fn encode_atn(records: &[AttentionRecord<f32>]) -> Result<Vec<u8>> {
    let first = records.first().ok_or_else(|| Error::Validation("no records to write".into()))?;
    let len = first.len();
    let per_head = records.iter().all(|r| !r.per_head.is_empty());
    let n_heads = if per_head { first.n_heads() } else { records.iter().map(|r| r.n_heads()).max().unwrap_or(0) };
    for r in records {
        if r.len() != len || (per_head && r.n_heads() != n_heads) {
            return Err(Error::Validation("records in one ATN1 file must share length and head count".into()));
        }
    }
    let header = AtnHeader {
        version: ATN_VERSION,
        n_blocks: to_u32(records.len(), "n_blocks")?,
        n_heads: to_u32(n_heads, "n_heads")?,
        len: to_u32(len, "length")?,
        flags: if per_head { FLAG_PER_HEAD } else { 0 },
    };
    let floats = header.payload_floats().ok_or_else(|| Error::Validation("ATN1 payload too large".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * floats);
    out.extend_from_slice(&ATN_MAGIC);
    for v in [header.version, header.n_blocks, header.n_heads, header.len, header.flags] {
        put_u32(&mut out, v);
    }
    if per_head {
        for r in records {
            for h in &r.per_head {
                put_f32s(&mut out, h.to_dense().into_data());
            }
        }
    }
    for r in records {
        put_f32s(&mut out, r.mean.to_dense().into_data());
    }
    Ok(out)
}

pub fn write_atn(records: &[AttentionRecord<f32>], path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_atn(records)?)
}

pub fn decode_atn(bytes: &[u8]) -> Result<AtnDump> {
    let mut rd = Reader::new(bytes);
    rd.magic(ATN_MAGIC)?;
    let version = rd.u32(HEADER_LEN)?;
    if version != ATN_VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: version,
            supported: ATN_VERSION,
            offset: 4,
        }
        .into());
    }
    let header = AtnHeader {
        version,
        n_blocks: rd.u32(HEADER_LEN)?,
        n_heads: rd.u32(HEADER_LEN)?,
        len: rd.u32(HEADER_LEN)?,
        flags: rd.u32(HEADER_LEN)?,
    };
    let invalid = |field, offset, reason: &str| FormatError::InvalidHeader {
        field,
        offset,
        reason: reason.to_string(),
    };
    if header.n_blocks == 0 {
        return Err(invalid("n_blocks", 8, "must be ≥ 1").into());
    }
    if header.len == 0 {
        return Err(invalid("length", 16, "must be ≥ 1").into());
    }
    if header.flags & !FLAG_PER_HEAD != 0 {
        return Err(invalid("flags", 20, "unknown flag bits").into());
    }
    if header.has_per_head() && header.n_heads == 0 {
        return Err(invalid("n_heads", 12, "per-head data flagged but n_heads = 0").into());
    }
    let floats = header
        .payload_floats()
        .ok_or_else(|| invalid("length", 16, "payload size overflows"))?;
    let expected = HEADER_LEN + 4 * floats;
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

    let (nb, nh, len) = (header.n_blocks as usize, header.n_heads as usize, header.len as usize);
    let read_matrix = |rd: &mut Reader| Tensor::from_vec(&[len, len], rd.f32s(len * len)).expect("square payload");
    let mut heads: Vec<Vec<Tensor<f32>>> = vec![Vec::new(); nb];
    if header.has_per_head() {
        for block in heads.iter_mut() {
            for _ in 0..nh {
                block.push(read_matrix(&mut rd));
            }
        }
    }
    let means: Vec<Tensor<f32>> = (0..nb).map(|_| read_matrix(&mut rd)).collect();
    debug_assert_eq!(rd.remaining(), 0);

    let mut warnings = Vec::new();
    let mut records = Vec::with_capacity(nb);
    for (b, (hs, mean)) in heads.into_iter().zip(means).enumerate() {
        for (h, m) in hs.iter().enumerate() {
            check_rows(m, b + 1, Some(h), &mut warnings);
        }
        check_rows(&mean, b + 1, None, &mut warnings);
        if !hs.is_empty() {
            let mut avg = Tensor::<f64>::zeros(&[len, len]);
            for m in &hs {
                avg.add_assign(&m.cast())?;
            }
            let avg = avg.scale(1.0 / hs.len() as f64);
            let max_abs = avg.max_abs_diff(&mean.cast())?;
            if max_abs > MEAN_TOL {
                warnings.push(AtnWarning::MeanMismatch { block: b + 1, max_abs });
            }
        }
        let per_head = hs.iter().map(AttentionMap::from_dense).collect::<Result<Vec<_>>>()?;
        records.push(AttentionRecord {
            block_id: b + 1,
            per_head,
            mean: AttentionMap::from_dense(&mean)?,
        });
    }
    for w in &warnings {
        log::warn!("ATN1 validation: {w:?}");
    }
    Ok(AtnDump {
        header,
        records,
        warnings,
    })
}

pub fn read_atn(path: impl AsRef<Path>) -> Result<AtnDump> {
    decode_atn(&read_bytes(path.as_ref())?)
}

fn check_rows(m: &Tensor<f32>, block: usize, head: Option<usize>, out: &mut Vec<AtnWarning>) {
    for row in 0..m.rows() {
        let sum: f64 = m.row(row).iter().map(|&v| v as f64).sum();
        if (sum - 1.0).abs().is_nan() || (sum - 1.0).abs() > ROW_TOL {
            out.push(AtnWarning::RowSum { block, head, row, sum });
        }
    }
}
