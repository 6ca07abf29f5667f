use super::{matmul, Scalar, Tensor};
use crate::error::{Error, Result};

/// `y = x·w + b` with `x: n×in`, `w: in×out`, `b: out`.
pub fn linear_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    if bias.len() != w.shape().get(1).copied().unwrap_or(0) {
        return Err(Error::dim("linear_forward", w.shape(), bias.shape()));
    }
    let mut y = matmul(x, w)?;
    let out = y.cols();
    for row in y.data_mut().chunks_exact_mut(out) {
        for (v, &b) in row.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads<T: Scalar> {
    pub dx: Tensor<T>,
    pub dw: Tensor<T>,
    pub dbias: Tensor<T>,
}

/// Exact gradients of `linear_forward` given upstream `dy: n×out`.
pub fn linear_backward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, dy: &Tensor<T>) -> Result<LinearGrads<T>> {
    if dy.rows() != x.rows() || dy.cols() != w.cols() {
        return Err(Error::dim("linear_backward", dy.shape(), &[x.rows(), w.cols()]));
    }
    let dx = matmul(dy, &w.transpose())?;
    let dw = matmul(&x.transpose(), dy)?;
    let mut db = Tensor::zeros(&[w.cols()]);
    for row in dy.data().chunks_exact(w.cols()) {
        for (d, &g) in db.data_mut().iter_mut().zip(row) {
            *d += g;
        }
    }
    Ok(LinearGrads { dx, dw, dbias: db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, relative_error, Rng};

    #[test]
    fn identity_weights_pass_through() {
        let x = Rng::seed_from(1).uniform_tensor::<f32>(&[3, 4], -1.0, 1.0);
        let y = linear_forward(&x, &Tensor::eye(4), &Tensor::zeros(&[4])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn zero_input_broadcasts_bias() {
        let b = Tensor::from_vec(&[3], vec![1.0f32, -2.0, 0.5]).unwrap();
        let w = Rng::seed_from(2).uniform_tensor(&[2, 3], -1.0, 1.0);
        let y = linear_forward(&Tensor::zeros(&[4, 2]), &w, &b).unwrap();
        for q in 0..4 {
            assert_eq!(y.row(q), b.data());
        }
    }

    #[test]
    fn bias_shape_checked() {
        let err = linear_forward(&Tensor::<f32>::zeros(&[1, 2]), &Tensor::zeros(&[2, 3]), &Tensor::zeros(&[2]));
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::seed_from(11);
        let x: Tensor<f64> = rng.uniform_tensor(&[3, 4], -1.0, 1.0);
        let w: Tensor<f64> = rng.uniform_tensor(&[4, 2], -1.0, 1.0);
        let b: Tensor<f64> = rng.uniform_tensor(&[2], -1.0, 1.0);
        let c: Tensor<f64> = rng.uniform_tensor(&[3, 2], -1.0, 1.0);
        // loss = Σ c ⊙ y, so dy = c
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            let y = linear_forward(x, w, b).unwrap();
            y.data().iter().zip(c.data()).map(|(a, b)| a * b).sum::<f64>()
        };
        let g = linear_backward(&x, &w, &c).unwrap();
        let nx = finite_diff_grad(|t| Ok(loss(t, &w, &b)), &x, 1e-5).unwrap();
        let nw = finite_diff_grad(|t| Ok(loss(&x, t, &b)), &w, 1e-5).unwrap();
        let nb = finite_diff_grad(|t| Ok(loss(&x, &w, t)), &b, 1e-5).unwrap();
        assert!(relative_error(&g.dx, &nx) <= 1e-6);
        assert!(relative_error(&g.dw, &nw) <= 1e-6);
        assert!(relative_error(&g.dbias, &nb) <= 1e-6);
    }
}
