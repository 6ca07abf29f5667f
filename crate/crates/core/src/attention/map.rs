use std::ops::Range;

use super::{AttentionMask, MaskKind};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Attention weights in band layout: row `q` keeps only the keys in
/// `mask.key_range(q)`, packed at the front of a `width`-long slot.
/// Global maps degenerate to ordinary dense row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap<T = f32> {
    mask: AttentionMask,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> AttentionMap<T> {
    pub fn zeros(mask: AttentionMask) -> Self {
        let width = mask.width();
        Self {
            mask,
            width,
            data: vec![T::zero(); mask.len * width],
        }
    }

    /// Wraps a dense `L×L` matrix as a global map.
    pub fn from_dense(m: &Tensor<T>) -> Result<Self> {
        if m.shape().len() != 2 || m.rows() != m.cols() || m.rows() == 0 {
            return Err(Error::dim("AttentionMap::from_dense", m.shape(), &[]));
        }
        Ok(Self {
            mask: AttentionMask::global(m.rows())?,
            width: m.rows(),
            data: m.data().to_vec(),
        })
    }

    pub fn mask(&self) -> &AttentionMask {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len
    }

    pub fn is_empty(&self) -> bool {
        self.mask.len == 0
    }

    #[inline]
    pub fn keys(&self, q: usize) -> Range<usize> {
        self.mask.key_range(q)
    }

    /// Weights for the allowed keys of row `q`, in key order.
    #[inline]
    pub fn row(&self, q: usize) -> &[T] {
        let n = self.keys(q).len();
        &self.data[q * self.width..q * self.width + n]
    }

    #[inline]
    pub fn row_mut(&mut self, q: usize) -> &mut [T] {
        let n = self.keys(q).len();
        &mut self.data[q * self.width..q * self.width + n]
    }

    /// Weight at `(q, k)`; exactly zero outside the mask.
    pub fn get(&self, q: usize, k: usize) -> T {
        let keys = self.keys(q);
        if keys.contains(&k) {
            self.data[q * self.width + (k - keys.start)]
        } else {
            T::zero()
        }
    }

    pub fn to_dense(&self) -> Tensor<T> {
        let n = self.len();
        let mut out = Tensor::zeros(&[n, n]);
        for q in 0..n {
            let keys = self.keys(q);
            out.row_mut(q)[keys].copy_from_slice(self.row(q));
        }
        out
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.len()).map(|q| self.row(q).iter().copied().sum()).collect()
    }

    /// Elementwise mean of maps that share a mask.
    pub fn average(maps: &[Self]) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::Precondition("no maps to average".into()))?;
        let mut out = Self::zeros(first.mask);
        for m in maps {
            if m.mask != first.mask {
                return Err(Error::Validation("cannot average maps with different masks".into()));
            }
            for (o, &v) in out.data.iter_mut().zip(&m.data) {
                *o += v;
            }
        }
        let inv = T::one() / T::lit(maps.len() as f64);
        out.data.iter_mut().for_each(|v| *v *= inv);
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> AttentionMap<U> {
        AttentionMap {
            mask: self.mask,
            width: self.width,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.mask.kind, MaskKind::Band(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::build_band_mask;

    #[test]
    fn dense_round_trip_keeps_band_zeros() {
        let mask = build_band_mask(6, 1).unwrap();
        let mut m = AttentionMap::<f32>::zeros(mask);
        for q in 0..6 {
            let n = m.row(q).len() as f32;
            m.row_mut(q).iter_mut().for_each(|v| *v = 1.0 / n);
        }
        let d = m.to_dense();
        for q in 0..6 {
            for k in 0..6 {
                assert_eq!(d.at(q, k), m.get(q, k));
                if q.abs_diff(k) > 1 {
                    assert_eq!(d.at(q, k), 0.0);
                }
            }
        }
        assert_eq!(AttentionMap::from_dense(&d).unwrap().to_dense(), d);
    }
}
