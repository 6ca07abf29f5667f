//! Binary PGM (P5) heatmaps. Row q is the query, column k the key, so the
//! image reads like the matrix: keys along x, queries along y, origin at the
//! top left.

use std::path::Path;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Grey level for one attention value after clipping to [0, 1]:
/// round-half-up of 255·v^γ. NaN maps to 0.
pub fn pixel_value(v: f64, gamma: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (255.0 * v.powf(gamma) + 0.5).floor().min(255.0) as u8
}

/// Encodes an L×L matrix. Returns the file bytes and the number of values
/// that had to be clipped.
pub fn encode_pgm<T: Scalar>(m: &Tensor<T>, gamma: f64) -> Result<(Vec<u8>, usize)> {
    if m.shape().len() != 2 || m.is_empty() {
        return Err(Error::Validation(format!("cannot render tensor of shape {:?}", m.shape())));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Validation(format!("gamma {gamma} must be positive")));
    }
    let (rows, cols) = (m.rows(), m.cols());
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.reserve(rows * cols);
    let mut clipped = 0;
    for &v in m.data() {
        let v = v.as_f64();
        if !(0.0..=1.0).contains(&v) {
            clipped += 1;
        }
        out.push(pixel_value(v, gamma));
    }
    Ok((out, clipped))
}

/// Writes a heatmap and warns when values outside [0, 1] were clipped.
pub fn render_heatmap<T: Scalar>(m: &Tensor<T>, path: impl AsRef<Path>, gamma: f64) -> Result<usize> {
    let path = path.as_ref();
    let (bytes, clipped) = encode_pgm(m, gamma)?;
    if clipped > 0 {
        log::warn!("{}: clipped {clipped} values outside [0, 1]", path.display());
    }
    write_bytes(path, &bytes)?;
    Ok(clipped)
}
