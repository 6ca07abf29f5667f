//! Dense tensor math shared by every other module.

mod fd;
mod linear;
mod rng;
mod scalar;
mod softmax;
mod tensor;

pub use fd::{finite_diff_grad, relative_error};
pub use linear::{linear_backward, linear_forward, LinearGrads};
pub use rng::{Rng, RngState};
pub use scalar::Scalar;
pub use softmax::{softmax_backward_row, softmax_rows};
pub use tensor::{matmul, Tensor};

pub(crate) use softmax::softmax_slice;

/// Shared access to a model's learnable tensors in a fixed order. Gradient
/// containers reuse the parameter type, so `params` of a model and of its
/// gradient line up one-to-one.
pub trait Parameters<T: Scalar> {
    fn params(&self) -> Vec<&Tensor<T>>;

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.fill(T::zero());
        }
    }

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

/// Dot product with eight independent accumulators so the compiler can
/// vectorize it; summation order is fixed, hence deterministic.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy_slice<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (d, &s) in y.iter_mut().zip(x) {
        *d += alpha * s;
    }
}
