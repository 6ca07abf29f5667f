//! Finite-difference checks of every hand-written backward pass.
//!
//! Each suite draws a random case per seed, projects the output onto a
//! random direction to get a scalar loss, and compares the analytic
//! gradient with central differences. The analytic side runs in the
//! precision under test; the difference oracle runs in f64 on the same
//! values, since f32 differences are dominated by rounding of the loss. The
//! error of a case is norm-wise over all checked coordinates; a suite
//! reports the worst case over its seeds.

use serde::Serialize;

use crate::attention::{attend, attention_backward, scaled_dot_attention, AttentionMask, MaskKind, MsaConfig};
use crate::error::Result;
use crate::numerics::{dot, linear_backward, linear_forward, softmax_backward_row, softmax_rows, Parameters, Rng, Scalar, Tensor};
use crate::toymodel::{build_encoder, EncoderBlock, EncoderConfig};

/// Relative-error bound for a precision.
pub fn tolerance<T: Scalar>() -> f64 {
    if T::NAME == "f64" {
        1e-6
    } else {
        1e-4
    }
}

/// Central-difference step of the oracle, which always runs in f64.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub precision: &'static str,
    pub seeds: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= self.tolerance
    }
}

pub const SUITES: [&str; 5] = ["linear", "softmax", "attention", "block", "end-to-end"];

/// Runs every suite over seeds `0..seeds`.
pub fn run_all<T: Scalar>(seeds: usize) -> Result<Vec<SuiteResult>> {
    SUITES.iter().map(|name| run_suite::<T>(name, seeds)).collect()
}

pub fn run_suite<T: Scalar>(name: &'static str, seeds: usize) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    for seed in 0..seeds as u64 {
        let mut rng = Rng::seed_from(seed).split(name.len() as u64);
        let err = match name {
            "linear" => linear_case::<T>(&mut rng)?,
            "softmax" => softmax_case::<T>(&mut rng)?,
            "attention" => attention_case::<T>(&mut rng)?,
            "block" => block_case::<T>(&mut rng)?,
            "end-to-end" => end_to_end_case::<T>(&mut rng)?,
            other => return Err(crate::Error::Validation(format!("unknown gradient suite {other:?}"))),
        };
        worst = worst.max(err);
    }
    Ok(SuiteResult {
        name,
        precision: T::NAME,
        seeds,
        max_rel_err: worst,
        tolerance: tolerance::<T>(),
    })
}

/// A set of tensors under test with a scalar loss over them.
#[derive(Clone)]
struct Inputs<T: Scalar>(Vec<Tensor<T>>);

impl<T: Scalar> Parameters<T> for Inputs<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        self.0.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.0.iter_mut().collect()
    }
}

/// Central differences of `loss` at the given `(tensor, element)`
/// coordinates, compared norm-wise against `analytic` (same layout as
/// `state.params()`).
fn compare<T, S, F>(state: &S, analytic: &[&Tensor<T>], coords: &[(usize, usize)], mut loss: F) -> Result<f64>
where
    T: Scalar,
    S: Parameters<f64> + Clone,
    F: FnMut(&S) -> Result<f64>,
{
    let h = FD_STEP;
    let mut probe = state.clone();
    let (mut diff, mut na, mut nb) = (0.0, 0.0, 0.0);
    for &(t, i) in coords {
        let orig = probe.params()[t].data()[i];
        probe.params_mut()[t].data_mut()[i] = orig + h;
        let plus = loss(&probe)?;
        probe.params_mut()[t].data_mut()[i] = orig - h;
        let minus = loss(&probe)?;
        probe.params_mut()[t].data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let exact = analytic[t].data()[i].as_f64();
        diff += (numeric - exact) * (numeric - exact);
        na += numeric * numeric;
        nb += exact * exact;
    }
    let denom = na.sqrt().max(nb.sqrt());
    Ok(if denom < 1e-7 { diff.sqrt() } else { diff.sqrt() / denom })
}

fn all_coords<T: Scalar, S: Parameters<T>>(s: &S) -> Vec<(usize, usize)> {
    s.params()
        .iter()
        .enumerate()
        .flat_map(|(t, p)| (0..p.len()).map(move |i| (t, i)))
        .collect()
}

/// Copies parameters across precisions; layouts must match.
fn lower<T: Scalar, P: Parameters<f64>, Q: Parameters<T>>(src: &P, dst: &mut Q) {
    for (d, s) in dst.params_mut().into_iter().zip(src.params()) {
        *d = s.cast();
    }
}

fn project<T: Scalar>(y: &Tensor<T>, g: &Tensor<T>) -> T {
    dot(y.data(), g.data())
}

fn inputs<T: Scalar>(s: &Inputs<f64>) -> Vec<Tensor<T>> {
    s.0.iter().map(Tensor::cast).collect()
}

fn linear_case<T: Scalar>(rng: &mut Rng) -> Result<f64> {
    let (n, din, dout) = (1 + rng.below(5), 1 + rng.below(6), 1 + rng.below(6));
    let state = Inputs(vec![
        rng.normal_tensor(&[n, din], 1.0),
        rng.normal_tensor(&[din, dout], 1.0),
        rng.normal_tensor(&[dout], 1.0),
    ]);
    let g: Tensor<f64> = rng.normal_tensor(&[n, dout], 1.0);
    let low = inputs::<T>(&state);
    let grads = linear_backward(&low[0], &low[1], &g.cast())?;
    let analytic = [&grads.dx, &grads.dw, &grads.dbias];
    compare(&state, &analytic, &all_coords(&state), |s| {
        Ok(project(&linear_forward(&s.0[0], &s.0[1], &s.0[2])?, &g))
    })
}

fn softmax_case<T: Scalar>(rng: &mut Rng) -> Result<f64> {
    let (m, n) = (1 + rng.below(4), 1 + rng.below(8));
    let mut allowed: Vec<bool> = (0..m * n).map(|_| rng.bernoulli(0.7)).collect();
    for q in 0..m {
        let k = rng.below(n);
        allowed[q * n + k] = true;
    }
    let state = Inputs(vec![rng.normal_tensor::<f64>(&[m, n], 2.0)]);
    let g: Tensor<f64> = rng.normal_tensor(&[m, n], 1.0);
    let (x, gl) = (state.0[0].cast::<T>(), g.cast::<T>());
    let y = softmax_rows(&x, &allowed)?;
    let mut dx = Tensor::zeros(&[m, n]);
    for q in 0..m {
        softmax_backward_row(y.row(q), gl.row(q), dx.row_mut(q));
    }
    compare(&state, &[&dx], &all_coords(&state), |s| Ok(project(&softmax_rows(&s.0[0], &allowed)?, &g)))
}

fn random_mask(rng: &mut Rng, len: usize) -> Result<AttentionMask> {
    let kind = if rng.bernoulli(0.5) {
        MaskKind::Global
    } else {
        MaskKind::Band(rng.below(len))
    };
    AttentionMask::new(kind, len)
}

fn attention_case<T: Scalar>(rng: &mut Rng) -> Result<f64> {
    let (len, dk, dv) = (2 + rng.below(7), 1 + rng.below(5), 1 + rng.below(5));
    let mask = random_mask(rng, len)?;
    let state = Inputs(vec![
        rng.normal_tensor(&[len, dk], 1.0),
        rng.normal_tensor(&[len, dk], 1.0),
        rng.normal_tensor(&[len, dv], 1.0),
    ]);
    let g: Tensor<f64> = rng.normal_tensor(&[len, dv], 1.0);
    let low = inputs::<T>(&state);
    let alpha = scaled_dot_attention(&low[0], &low[1], &mask)?;
    let grads = attention_backward(&low[0], &low[1], &low[2], &alpha, &g.cast())?;
    compare(&state, &[&grads.dq, &grads.dk, &grads.dv], &all_coords(&state), |s| {
        let a = scaled_dot_attention(&s.0[0], &s.0[1], &mask)?;
        Ok(project(&attend(&a, &s.0[2])?, &g))
    })
}

/// Block parameters plus the block input as the last tensor.
#[derive(Clone)]
struct BlockState<T: Scalar> {
    block: EncoderBlock<T>,
    x: Tensor<T>,
}

impl<T: Scalar> Parameters<T> for BlockState<T> {
    fn params(&self) -> Vec<&Tensor<T>> {
        let mut v = self.block.params();
        v.push(&self.x);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = self.block.params_mut();
        v.push(&mut self.x);
        v
    }
}

/// Randomizes every parameter, including norm gains and biases that
/// initialize to constants.
fn jitter<P: Parameters<f64>>(p: &mut P, rng: &mut Rng, scale: f64) {
    for t in p.params_mut() {
        let noise: Tensor<f64> = rng.normal_tensor(t.shape(), scale);
        t.add_assign(&noise).expect("same shape");
    }
}

fn block_case<T: Scalar>(rng: &mut Rng) -> Result<f64> {
    let cfg = MsaConfig::new(4, 2)?;
    let d_ff = 6;
    let len = 2 + rng.below(6);
    let mask = random_mask(rng, len)?;
    let mut block = EncoderBlock::init(&cfg, d_ff, rng);
    jitter(&mut block, rng, 0.1);
    let state = BlockState {
        block,
        x: rng.normal_tensor(&[len, cfg.d_model], 1.0),
    };
    let g: Tensor<f64> = rng.normal_tensor(&[len, cfg.d_model], 1.0);
    let mut low = BlockState {
        block: EncoderBlock::<T>::zeros(&cfg, d_ff),
        x: Tensor::zeros(&[len, cfg.d_model]),
    };
    lower(&state, &mut low);
    let (_, cache) = low.block.forward(&low.x, &cfg, &mask)?;
    let mut grad = EncoderBlock::zeros(&cfg, d_ff);
    let dx = low.block.backward(&cache, &g.cast(), &cfg, &mut grad)?;
    let mut analytic = grad.params();
    analytic.push(&dx);
    compare(&state, &analytic, &all_coords(&state), |s| {
        Ok(project(&s.block.forward(&s.x, &cfg, &mask)?.0, &g))
    })
}

/// N = 2, L = 8, one global and one banded block; checks a random 1% of
/// all parameters (at least 16 coordinates).
fn end_to_end_case<T: Scalar>(rng: &mut Rng) -> Result<f64> {
    let len = 8;
    let cfg = EncoderConfig::new(2, 8, 2, 16, len).with_masks(vec![MaskKind::Global, MaskKind::Band(1 + rng.below(3))]);
    let mut model = build_encoder::<f64>(&cfg, rng)?;
    jitter(&mut model, rng, 0.05);
    let x: Tensor<f64> = rng.normal_tensor(&[len, cfg.d_model], 1.0);
    let mut masked: Vec<usize> = rng.permutation(len)[..3].to_vec();
    masked.sort_unstable();
    let mut low = build_encoder::<T>(&cfg, &mut Rng::seed_from(0))?;
    lower(&model, &mut low);
    let (_, grad) = low.loss_and_grad(&x.cast(), &masked)?;
    let coords = all_coords(&model);
    let n = (coords.len() / 100).max(16);
    let picked: Vec<(usize, usize)> = rng.permutation(coords.len())[..n].iter().map(|&i| coords[i]).collect();
    compare(&model, &grad.params(), &picked, |m| m.loss(&x, &masked))
}
