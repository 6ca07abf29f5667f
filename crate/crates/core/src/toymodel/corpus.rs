use super::CorpusConfig;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Scalar, Tensor};

/// AR(1) coefficient of the smoothed-noise component.
const AR_COEFF: f64 = 0.95;
const N_TONES: usize = 3;
/// Std of the per-sequence constant offset, a stand-in for speaker or
/// channel bias that can only be recovered from context.
const OFFSET_STD: f64 = 1.5;

/// Locally correlated `L × width` sequences: per-channel AR(1) noise plus a
/// few sinusoids mixed into the channels with random weights, on top of a
/// per-sequence constant offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus<T: Scalar = f32> {
    sequences: Vec<Tensor<T>>,
}

impl<T: Scalar> SyntheticCorpus<T> {
    pub fn generate(cfg: &CorpusConfig) -> Result<Self> {
        if cfg.sequences == 0 || cfg.length == 0 || cfg.width == 0 {
            return Err(Error::Validation(format!("degenerate corpus config: {cfg:?}")));
        }
        let root = Rng::seed_from(cfg.seed);
        let sequences = (0..cfg.sequences)
            .map(|i| one_sequence(cfg.length, cfg.width, &mut root.split(i as u64)))
            .collect();
        Ok(Self { sequences })
    }

    pub fn from_sequences(sequences: Vec<Tensor<T>>) -> Result<Self> {
        let first = sequences.first().ok_or(Error::EmptySequence)?;
        let width = first.shape().get(1).copied();
        for s in &sequences {
            if s.shape().len() != 2 || s.shape().get(1).copied() != width || !s.is_finite() {
                return Err(Error::Validation("corpus sequences must be finite matrices of equal width".into()));
            }
        }
        Ok(Self { sequences })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn width(&self) -> usize {
        self.sequences[0].cols()
    }

    pub fn get(&self, i: usize) -> &Tensor<T> {
        &self.sequences[i]
    }

    pub fn sequences(&self) -> &[Tensor<T>] {
        &self.sequences
    }
}

fn one_sequence<T: Scalar>(len: usize, width: usize, rng: &mut Rng) -> Tensor<T> {
    let innov = (1.0 - AR_COEFF * AR_COEFF).sqrt();
    let tones: Vec<(f64, f64)> = (0..N_TONES)
        .map(|_| (rng.uniform(1.0 / 64.0, 1.0 / 12.0), rng.uniform(0.0, std::f64::consts::TAU)))
        .collect();
    let mix: Vec<f64> = (0..N_TONES * width).map(|_| rng.normal() / (N_TONES as f64).sqrt()).collect();
    let mut state: Vec<f64> = (0..width).map(|_| rng.normal()).collect();
    let offset: Vec<f64> = (0..width).map(|_| OFFSET_STD * rng.normal()).collect();
    let mut out = Tensor::zeros(&[len, width]);
    for t in 0..len {
        let waves: Vec<f64> = tones
            .iter()
            .map(|&(f, phase)| (std::f64::consts::TAU * f * t as f64 + phase).sin() * std::f64::consts::SQRT_2)
            .collect();
        let row = out.row_mut(t);
        for c in 0..width {
            if t > 0 {
                state[c] = AR_COEFF * state[c] + innov * rng.normal();
            }
            let periodic: f64 = (0..N_TONES).map(|k| mix[k * width + c] * waves[k]).sum();
            row[c] = T::lit((0.5 * state[c] + 0.5 * periodic) * std::f64::consts::SQRT_2 + offset[c]);
        }
    }
    out
}
