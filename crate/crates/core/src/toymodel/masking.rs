use crate::error::{Error, Result};
use crate::numerics::{Rng, Scalar, Tensor};

/// Chooses span starts i.i.d. with probability `mask_prob` and masks
/// `span_len` frames from each start (spans may overlap and are clipped at
/// the end). Masked rows of the returned copy hold `embedding`. The index
/// set is sorted and duplicate-free.
pub fn mask_spans<T: Scalar>(
    x: &Tensor<T>,
    mask_prob: f64,
    span_len: usize,
    rng: &mut Rng,
    embedding: &[T],
) -> Result<(Tensor<T>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&mask_prob) || span_len == 0 {
        return Err(Error::Validation(format!("mask_prob {mask_prob} / span_len {span_len} out of range")));
    }
    if embedding.len() != x.cols() {
        return Err(Error::dim("mask_spans", x.shape(), &[embedding.len()]));
    }
    let idx = span_indices(x.rows(), mask_prob, span_len, rng);
    let mut out = x.clone();
    for &i in &idx {
        out.row_mut(i).copy_from_slice(embedding);
    }
    Ok((out, idx))
}

pub(crate) fn span_indices(len: usize, mask_prob: f64, span_len: usize, rng: &mut Rng) -> Vec<usize> {
    let mut hit = vec![false; len];
    for start in 0..len {
        if rng.bernoulli(mask_prob) {
            hit[start..(start + span_len).min(len)].iter_mut().for_each(|h| *h = true);
        }
    }
    (0..len).filter(|&i| hit[i]).collect()
}

/// Mean over masked frames of the squared error summed across the width.
/// Returns the loss and its gradient with respect to `pred`.
pub fn reconstruction_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>, masked: &[usize]) -> Result<(T, Tensor<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::dim("reconstruction_loss", pred.shape(), target.shape()));
    }
    if masked.is_empty() {
        return Err(Error::Precondition("reconstruction loss needs at least one masked frame".into()));
    }
    let inv = T::one() / T::lit(masked.len() as f64);
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(pred.shape());
    for &i in masked {
        let g = grad.row_mut(i);
        for ((d, &p), &t) in g.iter_mut().zip(pred.row(i)).zip(target.row(i)) {
            let e = p - t;
            loss += e * e;
            *d += (e + e) * inv;
        }
    }
    Ok((loss * inv, grad))
}
