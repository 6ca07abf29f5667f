use crate::error::Result;
use crate::numerics::{linear_backward, linear_forward, Parameters, Rng, Scalar, Tensor};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

/// Tanh approximation of GELU.
#[inline]
pub fn gelu<T: Scalar>(x: T) -> T {
    let c = T::lit(SQRT_2_OVER_PI);
    let t = (c * (x + T::lit(GELU_C) * x * x * x)).tanh();
    T::lit(0.5) * x * (T::one() + t)
}

#[inline]
pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::lit(SQRT_2_OVER_PI);
    let k = T::lit(GELU_C);
    let t = (c * (x + k * x * x * x)).tanh();
    let half = T::lit(0.5);
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::lit(3.0) * k * x * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T: Scalar = f32> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            w: Tensor::zeros(&[fan_in, fan_out]),
            b: Tensor::zeros(&[fan_out]),
        }
    }

    pub fn init(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        Self {
            w: rng.uniform_tensor(&[fan_in, fan_out], -bound, bound),
            b: Tensor::zeros(&[fan_out]),
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        linear_forward(x, &self.w, &self.b)
    }

    /// Returns `dx` and accumulates weight gradients into `grad`.
    pub fn backward(&self, x: &Tensor<T>, dy: &Tensor<T>, grad: &mut Self) -> Result<Tensor<T>> {
        let g = linear_backward(x, &self.w, dy)?;
        grad.w.add_assign(&g.dw)?;
        grad.b.add_assign(&g.dbias)?;
        Ok(g.dx)
    }
}

impl<T: Scalar> Parameters<T> for Linear<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.w, &mut self.b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm<T: Scalar = f32> {
    pub gain: Tensor<T>,
    pub bias: Tensor<T>,
}

pub(crate) struct LayerNormCache<T: Scalar> {
    xhat: Tensor<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> LayerNorm<T> {
    pub const EPS: f64 = 1e-5;

    pub fn new(width: usize) -> Self {
        Self {
            gain: Tensor::full(&[width], T::one()),
            bias: Tensor::zeros(&[width]),
        }
    }

    pub fn zeros(width: usize) -> Self {
        Self {
            gain: Tensor::zeros(&[width]),
            bias: Tensor::zeros(&[width]),
        }
    }

    pub(crate) fn forward(&self, x: &Tensor<T>) -> (Tensor<T>, LayerNormCache<T>) {
        let (n, d) = (x.rows(), x.cols());
        let inv_d = T::one() / T::lit(d as f64);
        let mut xhat = Tensor::zeros(&[n, d]);
        let mut y = Tensor::zeros(&[n, d]);
        let mut inv_std = Vec::with_capacity(n);
        for r in 0..n {
            let row = x.row(r);
            let mu = row.iter().copied().sum::<T>() * inv_d;
            let var = row.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() * inv_d;
            let s = T::one() / (var + T::lit(Self::EPS)).sqrt();
            inv_std.push(s);
            let (h, o) = (xhat.row_mut(r), y.row_mut(r));
            for c in 0..d {
                h[c] = (row[c] - mu) * s;
            }
            for c in 0..d {
                o[c] = h[c] * self.gain.data()[c] + self.bias.data()[c];
            }
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub(crate) fn backward(&self, cache: &LayerNormCache<T>, dy: &Tensor<T>, grad: &mut Self) -> Tensor<T> {
        let (n, d) = (dy.rows(), dy.cols());
        let inv_d = T::one() / T::lit(d as f64);
        let mut dx = Tensor::zeros(&[n, d]);
        let mut dxhat = vec![T::zero(); d];
        for r in 0..n {
            let (g, h) = (dy.row(r), cache.xhat.row(r));
            for c in 0..d {
                grad.gain.data_mut()[c] += g[c] * h[c];
                grad.bias.data_mut()[c] += g[c];
                dxhat[c] = g[c] * self.gain.data()[c];
            }
            let mean = dxhat.iter().copied().sum::<T>() * inv_d;
            let mean_h = dxhat.iter().zip(h).map(|(&a, &b)| a * b).sum::<T>() * inv_d;
            let s = cache.inv_std[r];
            let out = dx.row_mut(r);
            for c in 0..d {
                out[c] = s * (dxhat[c] - mean - h[c] * mean_h);
            }
        }
        dx
    }
}

impl<T: Scalar> Parameters<T> for LayerNorm<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.gain, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.gain, &mut self.bias]
    }
}

/// `W₂·gelu(W₁·x + b₁) + b₂`
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward<T: Scalar = f32> {
    pub inner: Linear<T>,
    pub outer: Linear<T>,
}

pub(crate) struct FeedForwardCache<T: Scalar> {
    x: Tensor<T>,
    pre: Tensor<T>,
    act: Tensor<T>,
}

impl<T: Scalar> FeedForward<T> {
    pub fn zeros(d_model: usize, d_ff: usize) -> Self {
        Self {
            inner: Linear::zeros(d_model, d_ff),
            outer: Linear::zeros(d_ff, d_model),
        }
    }

    pub fn init(d_model: usize, d_ff: usize, rng: &mut Rng) -> Self {
        Self {
            inner: Linear::init(d_model, d_ff, rng),
            outer: Linear::init(d_ff, d_model, rng),
        }
    }

    pub(crate) fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, FeedForwardCache<T>)> {
        let pre = self.inner.forward(x)?;
        let act = pre.map(gelu);
        let y = self.outer.forward(&act)?;
        Ok((
            y,
            FeedForwardCache {
                x: x.clone(),
                pre,
                act,
            },
        ))
    }

    pub(crate) fn backward(&self, cache: &FeedForwardCache<T>, dy: &Tensor<T>, grad: &mut Self) -> Result<Tensor<T>> {
        let mut dact = self.outer.backward(&cache.act, dy, &mut grad.outer)?;
        for (d, &p) in dact.data_mut().iter_mut().zip(cache.pre.data()) {
            *d *= gelu_grad(p);
        }
        self.inner.backward(&cache.x, &dact, &mut grad.inner)
    }
}

impl<T: Scalar> Parameters<T> for FeedForward<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        let mut v = self.inner.params();
        v.extend(self.outer.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = self.inner.params_mut();
        v.extend(self.outer.params_mut());
        v
    }
}
