use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Central-difference gradient of a scalar function:
/// `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h` for every coordinate.
pub fn finite_diff_grad<T, F>(mut f: F, x: &Tensor<T>, h: T) -> Result<Tensor<T>>
where
    T: Scalar,
    F: FnMut(&Tensor<T>) -> Result<T>,
{
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape());
    let two_h = h + h;
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let plus = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let minus = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!("f is not finite around coordinate {i}")));
        }
        grad.data_mut()[i] = (plus - minus) / two_h;
    }
    Ok(grad)
}

/// Norm-wise relative error `‖a − b‖ / max(‖a‖, ‖b‖)`, computed in f64.
/// Falls back to the absolute error when both norms are below 1e-7, which
/// covers structurally zero gradients such as the key bias.
pub fn relative_error<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "relative_error shape mismatch");
    let mut diff = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x.as_f64(), y.as_f64());
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    let denom = na.sqrt().max(nb.sqrt());
    if denom < 1e-7 {
        diff.sqrt()
    } else {
        diff.sqrt() / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::softmax_rows;

    #[test]
    fn sum_of_squares() {
        let x = Tensor::from_vec(&[2], vec![1.0f64, 2.0]).unwrap();
        let g = finite_diff_grad(|t| Ok(t.sum_squares()), &x, 1e-5).unwrap();
        assert!((g.data()[0] - 2.0).abs() < 1e-6);
        assert!((g.data()[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let x = Tensor::from_vec(&[3], vec![0.3f64, -1.0, 9.0]).unwrap();
        let g = finite_diff_grad(|_| Ok(4.2), &x, 1e-5).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_first_component_matches_jacobian_row() {
        let x = Tensor::from_vec(&[1, 3], vec![0.2f64, -0.7, 1.1]).unwrap();
        let pick_first = |t: &Tensor<f64>| Ok(softmax_rows(t, &[true; 3])?.at(0, 0));
        let g = finite_diff_grad(pick_first, &x, 1e-5).unwrap();
        // ∂s₀/∂xⱼ = s₀(δ₀ⱼ − sⱼ)
        let e: Vec<f64> = x.data().iter().map(|v| v.exp()).collect();
        let z: f64 = e.iter().sum();
        let s: Vec<f64> = e.iter().map(|v| v / z).collect();
        for j in 0..3 {
            let want = s[0] * (if j == 0 { 1.0 } else { 0.0 } - s[j]);
            assert!((g.data()[j] - want).abs() < 1e-9, "j={j}");
        }
    }

    #[test]
    fn non_finite_is_reported() {
        let x = Tensor::from_vec(&[1], vec![0.0f64]).unwrap();
        let err = finite_diff_grad(|t| Ok(1.0 / t.data()[0].abs().min(0.0)), &x, 1e-5);
        assert!(matches!(err, Err(Error::Numeric(_))));
    }
}
