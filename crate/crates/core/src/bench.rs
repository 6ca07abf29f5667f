//! Dense versus banded multi-head attention forward timing.
//!
//! Both timed paths are `msa_forward`; only the mask differs, so the ratio
//! measures the work saved by never computing off-band logits. Before any
//! timing, both are checked against a straight-line dense reference that
//! materializes the full `L × L` logits and masks them in the softmax.

use std::time::Instant;

use serde::Serialize;

use crate::attention::{msa_forward, AttentionMask, MaskKind, MsaConfig, MsaWeights};
use crate::error::{Error, Result};
use crate::numerics::{linear_forward, matmul, softmax_rows, Rng, Scalar, Tensor};

/// Maximum allowed deviation from the dense reference.
pub const BENCH_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub len: usize,
    pub radius: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub repeats: usize,
    /// Median seconds per forward.
    pub dense_time: f64,
    pub banded_time: f64,
    /// `dense_time / banded_time`.
    pub ratio: f64,
    /// Worst output deviation of the banded path from the masked dense reference.
    pub banded_max_abs_diff: f64,
    /// Worst output deviation of the global path from the dense reference.
    pub dense_max_abs_diff: f64,
}

/// Multi-head attention with every logit materialized.
pub fn dense_reference<T: Scalar>(x: &Tensor<T>, cfg: &MsaConfig, w: &MsaWeights<T>, mask: &AttentionMask) -> Result<Tensor<T>> {
    let (len, dk) = (x.rows(), cfg.d_k());
    let allowed = mask.to_bool_matrix();
    let scale = T::one() / T::lit(dk as f64).sqrt();
    let mut concat = Tensor::zeros(&[len, cfg.d_model]);
    for (h, hw) in w.heads.iter().enumerate() {
        let q = linear_forward(x, &hw.wq, &hw.bq)?;
        let k = linear_forward(x, &hw.wk, &hw.bk)?;
        let v = linear_forward(x, &hw.wv, &hw.bv)?;
        let logits = matmul(&q, &k.transpose())?.scale(scale);
        let alpha = softmax_rows(&logits, &allowed)?;
        let head = matmul(&alpha, &v)?;
        for i in 0..len {
            concat.row_mut(i)[h * dk..(h + 1) * dk].copy_from_slice(head.row(i));
        }
    }
    linear_forward(&concat, &w.wo, &w.bo)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn time_forward(x: &Tensor, cfg: &MsaConfig, w: &MsaWeights, mask: &AttentionMask, repeats: usize) -> Result<f64> {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        let out = msa_forward(x, cfg, w, mask, 1)?;
        times.push(t.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    Ok(median(times))
}

/// Times f32 forwards on seeded random inputs. Fails without timing
/// anything if either path deviates from the dense reference.
pub fn bench_attention(len: usize, radius: usize, d_model: usize, n_heads: usize, repeats: usize, seed: u64) -> Result<BenchResult> {
    if repeats == 0 {
        return Err(Error::Validation("repeats must be ≥ 1".into()));
    }
    let cfg = MsaConfig::new(d_model, n_heads)?;
    let mut rng = Rng::seed_from(seed);
    let w: MsaWeights<f32> = MsaWeights::init(&cfg, &mut rng);
    let x: Tensor<f32> = rng.normal_tensor(&[len, d_model], 1.0);
    let global = AttentionMask::new(MaskKind::Global, len)?;
    let band = AttentionMask::new(MaskKind::Band(radius), len)?;

    let banded_max_abs_diff = msa_forward(&x, &cfg, &w, &band, 1)?
        .0
        .max_abs_diff(&dense_reference(&x, &cfg, &w, &band)?)? as f64;
    let dense_max_abs_diff = msa_forward(&x, &cfg, &w, &global, 1)?
        .0
        .max_abs_diff(&dense_reference(&x, &cfg, &w, &global)?)? as f64;
    if !(banded_max_abs_diff <= BENCH_TOL && dense_max_abs_diff <= BENCH_TOL) {
        return Err(Error::Numeric(format!(
            "kernel disagrees with dense reference (banded {banded_max_abs_diff:e}, global {dense_max_abs_diff:e}); not timing"
        )));
    }

    let dense_time = time_forward(&x, &cfg, &w, &global, repeats)?;
    let banded_time = time_forward(&x, &cfg, &w, &band, repeats)?;
    Ok(BenchResult {
        len,
        radius,
        d_model,
        n_heads,
        repeats,
        dense_time,
        banded_time,
        ratio: dense_time / banded_time,
        banded_max_abs_diff,
        dense_max_abs_diff,
    })
}
