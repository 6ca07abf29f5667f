//! Shared fixtures for the criterion benches.

use attnscope::attention::{MsaConfig, MsaWeights};
use attnscope::{Rng, Tensor};

pub struct Fixture {
    pub cfg: MsaConfig,
    pub weights: MsaWeights<f32>,
    pub x: Tensor<f32>,
}

/// Seeded weights and a standard-normal `len × d_model` input.
pub fn fixture(len: usize, d_model: usize, n_heads: usize, seed: u64) -> Fixture {
    let cfg = MsaConfig::new(d_model, n_heads).expect("valid bench config");
    let mut rng = Rng::seed_from(seed);
    let weights = MsaWeights::init(&cfg, &mut rng);
    let x = rng.normal_tensor(&[len, d_model], 1.0);
    Fixture { cfg, weights, x }
}
