//! ATCK: toy encoder checkpoints.
//!
//! ```text
//! 0   magic "ATCK"
//! 4   version (u32, = 1)
//! 8   n_blocks, d_model, n_heads, d_ff, max_len (u32 each)
//! 28  per block: mask kind (u32; 0 = global, 1 = band), radius (u32)
//! ..  n_tensors (u32)
//! ..  per tensor: ndim (u32), dims (u32 × ndim), f32 data
//! ```
//!
//! Tensors follow the model's parameter order: mask embedding, each block,
//! final norm, output head. Integers and floats are little-endian.

use std::path::Path;

use super::binary::{put_f32s, put_u32, to_u32, Reader};
use super::{read_bytes, write_bytes};
use crate::attention::MaskKind;
use crate::error::{Error, FormatError, Result};
use crate::numerics::{Parameters, Rng};
use crate::toymodel::{build_encoder, Encoder, EncoderConfig};

pub const CKPT_MAGIC: [u8; 4] = *b"ATCK";
pub const CKPT_VERSION: u32 = 1;

pub fn encode_checkpoint(model: &Encoder<f32>) -> Result<Vec<u8>> {
    let cfg = &model.cfg;
    let mut out = Vec::new();
    out.extend_from_slice(&CKPT_MAGIC);
    put_u32(&mut out, CKPT_VERSION);
    for (v, f) in [
        (cfg.n_blocks, "n_blocks"),
        (cfg.d_model, "d_model"),
        (cfg.n_heads, "n_heads"),
        (cfg.d_ff, "d_ff"),
        (cfg.max_len, "max_len"),
    ] {
        put_u32(&mut out, to_u32(v, f)?);
    }
    for b in 0..cfg.n_blocks {
        let (kind, radius) = match cfg.mask(b) {
            MaskKind::Global => (0, 0),
            MaskKind::Band(r) => (1, to_u32(r, "radius")?),
        };
        put_u32(&mut out, kind);
        put_u32(&mut out, radius);
    }
    let params = model.params();
    put_u32(&mut out, to_u32(params.len(), "n_tensors")?);
    for p in params {
        put_u32(&mut out, to_u32(p.shape().len(), "ndim")?);
        for &d in p.shape() {
            put_u32(&mut out, to_u32(d, "dim")?);
        }
        put_f32s(&mut out, p.data().iter().copied());
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Encoder<f32>> {
    let mut rd = Reader::new(bytes);
    rd.magic(CKPT_MAGIC)?;
    let version = rd.u32(8)?;
    if version != CKPT_VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: version,
            supported: CKPT_VERSION,
            offset: 4,
        }
        .into());
    }
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = rd.u32(28)? as usize;
    }
    let [n_blocks, d_model, n_heads, d_ff, max_len] = dims;
    if n_blocks == 0 || n_blocks > bytes.len() {
        return Err(FormatError::InvalidHeader {
            field: "n_blocks",
            offset: 8,
            reason: format!("{n_blocks} is not a plausible block count"),
        }
        .into());
    }
    let mut masks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let at = rd.pos();
        let kind = rd.u32(28 + 8 * n_blocks)?;
        let radius = rd.u32(28 + 8 * n_blocks)? as usize;
        masks.push(match kind {
            0 => MaskKind::Global,
            1 => MaskKind::Band(radius),
            k => {
                return Err(FormatError::InvalidHeader {
                    field: "mask kind",
                    offset: at,
                    reason: format!("unknown mask kind {k}"),
                }
                .into())
            }
        });
    }
    let cfg = EncoderConfig::new(n_blocks, d_model, n_heads, d_ff, max_len).with_masks(masks);
    cfg.validate()?;
    let mut model: Encoder<f32> = build_encoder(&cfg, &mut Rng::seed_from(0))?;
    let tensors_at = rd.pos();
    let n_tensors = rd.u32(tensors_at + 4)? as usize;
    let mut params = model.params_mut();
    if n_tensors != params.len() {
        return Err(FormatError::InvalidHeader {
            field: "n_tensors",
            offset: tensors_at,
            reason: format!("config implies {} tensors, file has {n_tensors}", params.len()),
        }
        .into());
    }
    for (i, p) in params.iter_mut().enumerate() {
        let at = rd.pos();
        let ndim = rd.u32(at + 4)? as usize;
        let mut shape = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            shape.push(rd.u32(at + 4 + 4 * ndim)? as usize);
        }
        if shape != p.shape() {
            return Err(Error::Validation(format!(
                "tensor {i} has shape {shape:?}, config implies {:?}",
                p.shape()
            )));
        }
        let need = rd.pos() + 4 * p.len();
        if bytes.len() < need {
            return Err(FormatError::Truncated {
                expected: need,
                actual: bytes.len(),
            }
            .into());
        }
        let vals = rd.f32s(p.len());
        p.data_mut().copy_from_slice(&vals);
    }
    if rd.remaining() != 0 {
        return Err(FormatError::SizeMismatch {
            expected: rd.pos(),
            actual: bytes.len(),
        }
        .into());
    }
    drop(params);
    if model.params().iter().any(|p| !p.is_finite()) {
        return Err(Error::Numeric("checkpoint contains non-finite weights".into()));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &Encoder<f32>, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_checkpoint(model)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Encoder<f32>> {
    decode_checkpoint(&read_bytes(path.as_ref())?)
}
