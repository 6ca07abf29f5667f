use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// In-place softmax over a slice; every element participates.
#[inline]
pub(crate) fn softmax_slice<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    let inv = T::one() / sum;
    for x in row.iter_mut() {
        *x *= inv;
    }
}

/// Row-wise softmax restricted to `allowed` entries (row-major, same shape
/// as `x`). Disallowed entries are excluded from both the max and the sum
/// and come out as exact zeros.
pub fn softmax_rows<T: Scalar>(x: &Tensor<T>, allowed: &[bool]) -> Result<Tensor<T>> {
    if x.shape().len() != 2 {
        return Err(Error::dim("softmax_rows", x.shape(), &[allowed.len()]));
    }
    let (m, n) = (x.rows(), x.cols());
    if allowed.len() != m * n {
        return Err(Error::dim("softmax_rows", x.shape(), &[allowed.len()]));
    }
    let mut out = Tensor::zeros(&[m, n]);
    for q in 0..m {
        let mask = &allowed[q * n..(q + 1) * n];
        let row = x.row(q);
        let max = row
            .iter()
            .zip(mask)
            .filter(|(_, &a)| a)
            .map(|(&v, _)| v)
            .fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            return Err(Error::Precondition(format!("row {q} has no allowed entries")));
        }
        let dst = out.row_mut(q);
        let mut sum = T::zero();
        for ((d, &v), &a) in dst.iter_mut().zip(row).zip(mask) {
            if a {
                *d = (v - max).exp();
                sum += *d;
            }
        }
        let inv = T::one() / sum;
        for (d, &a) in dst.iter_mut().zip(mask) {
            if a {
                *d *= inv;
            }
        }
    }
    Ok(out)
}

/// Vector-Jacobian product of softmax: given output `y` and upstream `dy`,
/// returns `y ⊙ (dy − ⟨y, dy⟩)`. Entries with `y == 0` from masking stay 0.
pub fn softmax_backward_row<T: Scalar>(y: &[T], dy: &[T], dx: &mut [T]) {
    let dot: T = y.iter().zip(dy).map(|(&a, &b)| a * b).sum();
    for ((d, &a), &b) in dx.iter_mut().zip(y).zip(dy) {
        *d = a * (b - dot);
    }
}
