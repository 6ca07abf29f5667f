use super::{AttentionMap, AttentionMask};
use crate::error::{Error, Result};
use crate::numerics::{axpy_slice, dot, softmax_backward_row, softmax_slice, Scalar, Tensor};

/// `softmax(Q·Kᵀ/√d_k)` restricted to `mask`. Only allowed logits are ever
/// computed; everything outside the mask is an exact zero.
pub fn scaled_dot_attention<T: Scalar>(q: &Tensor<T>, k: &Tensor<T>, mask: &AttentionMask) -> Result<AttentionMap<T>> {
    check_qk(q, k, mask)?;
    let scale = T::one() / T::lit(q.cols() as f64).sqrt();
    let mut alpha = AttentionMap::zeros(*mask);
    for i in 0..mask.len {
        let keys = mask.key_range(i);
        let qi = q.row(i);
        let row = alpha.row_mut(i);
        for (dst, j) in row.iter_mut().zip(keys) {
            *dst = dot(qi, k.row(j)) * scale;
        }
        softmax_slice(row);
    }
    Ok(alpha)
}

/// `head[q] = Σ_k α[q][k]·V[k]`
pub fn attend<T: Scalar>(alpha: &AttentionMap<T>, v: &Tensor<T>) -> Result<Tensor<T>> {
    if v.rows() != alpha.len() {
        return Err(Error::dim("attend", &[alpha.len(), alpha.len()], v.shape()));
    }
    let mut out = Tensor::zeros(&[alpha.len(), v.cols()]);
    for i in 0..alpha.len() {
        let keys = alpha.keys(i);
        let dst = out.row_mut(i);
        for (&a, j) in alpha.row(i).iter().zip(keys) {
            axpy_slice(a, v.row(j), dst);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AttentionGrads<T: Scalar> {
    pub dq: Tensor<T>,
    pub dk: Tensor<T>,
    pub dv: Tensor<T>,
}

/// Backward pass of `attend(scaled_dot_attention(Q, K), V)` given the
/// upstream gradient of the head output.
pub fn attention_backward<T: Scalar>(
    q: &Tensor<T>,
    k: &Tensor<T>,
    v: &Tensor<T>,
    alpha: &AttentionMap<T>,
    dhead: &Tensor<T>,
) -> Result<AttentionGrads<T>> {
    check_qk(q, k, alpha.mask())?;
    if dhead.shape() != [alpha.len(), v.cols()] || v.rows() != alpha.len() {
        return Err(Error::dim("attention_backward", dhead.shape(), v.shape()));
    }
    let scale = T::one() / T::lit(q.cols() as f64).sqrt();
    let mut dq = Tensor::zeros(q.shape());
    let mut dk = Tensor::zeros(k.shape());
    let mut dv = Tensor::zeros(v.shape());
    let width = alpha.mask().width();
    let mut dalpha = vec![T::zero(); width];
    let mut dlogit = vec![T::zero(); width];
    for i in 0..alpha.len() {
        let keys = alpha.keys(i);
        let n = keys.len();
        let a = alpha.row(i);
        let g = dhead.row(i);
        for (slot, j) in keys.clone().enumerate() {
            dalpha[slot] = dot(g, v.row(j));
            axpy_slice(a[slot], g, dv.row_mut(j));
        }
        softmax_backward_row(a, &dalpha[..n], &mut dlogit[..n]);
        let qi = q.row(i);
        for (slot, j) in keys.enumerate() {
            let s = dlogit[slot] * scale;
            axpy_slice(s, k.row(j), dq.row_mut(i));
            axpy_slice(s, qi, dk.row_mut(j));
        }
    }
    Ok(AttentionGrads { dq, dk, dv })
}

fn check_qk<T: Scalar>(q: &Tensor<T>, k: &Tensor<T>, mask: &AttentionMask) -> Result<()> {
    if q.shape().len() != 2 || q.shape() != k.shape() {
        return Err(Error::dim("scaled_dot_attention", q.shape(), k.shape()));
    }
    if q.cols() == 0 {
        return Err(Error::dim("scaled_dot_attention (d_k = 0)", q.shape(), k.shape()));
    }
    if q.rows() != mask.len {
        return Err(Error::dim("scaled_dot_attention (mask length)", q.shape(), &[mask.len]));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::build_band_mask;
    use crate::numerics::{finite_diff_grad, relative_error, Rng};

    #[test]
    fn zero_logits_give_uniform_rows() {
        let z = Tensor::<f64>::zeros(&[5, 3]);
        let a = scaled_dot_attention(&z, &z, &AttentionMask::global(5).unwrap()).unwrap();
        for q in 0..5 {
            for &v in a.row(q) {
                assert!((v - 0.2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn radius_zero_is_identity() {
        let mut rng = Rng::seed_from(3);
        let q: Tensor<f32> = rng.uniform_tensor(&[6, 4], -3.0, 3.0);
        let k: Tensor<f32> = rng.uniform_tensor(&[6, 4], -3.0, 3.0);
        let a = scaled_dot_attention(&q, &k, &build_band_mask(6, 0).unwrap()).unwrap();
        assert_eq!(a.to_dense(), Tensor::eye(6));
    }

    #[test]
    fn two_by_two_by_hand() {
        let q = Tensor::from_rows(&[[1.0f64], [0.0]]);
        let a = scaled_dot_attention(&q, &q, &AttentionMask::global(2).unwrap()).unwrap();
        let e = std::f64::consts::E;
        assert!((a.get(0, 0) - e / (e + 1.0)).abs() < 1e-12);
        assert!((a.get(0, 1) - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((a.get(0, 0) - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn zero_width_keys_rejected() {
        let z = Tensor::<f32>::zeros(&[3, 0]);
        let err = scaled_dot_attention(&z, &z, &AttentionMask::global(3).unwrap());
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = Rng::seed_from(17);
        for mask in [AttentionMask::global(5).unwrap(), build_band_mask(5, 1).unwrap()] {
            let q: Tensor<f64> = rng.uniform_tensor(&[5, 3], -1.0, 1.0);
            let k: Tensor<f64> = rng.uniform_tensor(&[5, 3], -1.0, 1.0);
            let v: Tensor<f64> = rng.uniform_tensor(&[5, 2], -1.0, 1.0);
            let c: Tensor<f64> = rng.uniform_tensor(&[5, 2], -1.0, 1.0);
            let loss = |q: &Tensor<f64>, k: &Tensor<f64>, v: &Tensor<f64>| -> Result<f64> {
                let h = attend(&scaled_dot_attention(q, k, &mask)?, v)?;
                Ok(h.data().iter().zip(c.data()).map(|(a, b)| a * b).sum())
            };
            let alpha = scaled_dot_attention(&q, &k, &mask).unwrap();
            let g = attention_backward(&q, &k, &v, &alpha, &c).unwrap();
            let nq = finite_diff_grad(|t| loss(t, &k, &v), &q, 1e-5).unwrap();
            let nk = finite_diff_grad(|t| loss(&q, t, &v), &k, 1e-5).unwrap();
            let nv = finite_diff_grad(|t| loss(&q, &k, t), &v, 1e-5).unwrap();
            assert!(relative_error(&g.dq, &nq) <= 1e-6);
            assert!(relative_error(&g.dk, &nk) <= 1e-6);
            assert!(relative_error(&g.dv, &nv) <= 1e-6);
        }
    }
}
