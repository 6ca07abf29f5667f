use serde::{Deserialize, Serialize};

use super::{default_band_width, PatternCategory};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

/// Knobs of the synthetic heatmap generator. Ranges are sampled uniformly
/// per matrix. The defaults land each family inside its category under the
/// default classifier thresholds for any `L ≥ 10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrototypeParams {
    /// Gaussian row width as a fraction of the default band half-width.
    pub sigma_frac: (f64, f64),
    /// Share of each diagonal row spread uniformly over all keys.
    pub diagonal_floor: (f64, f64),
    /// Share of each vertical row placed on the vertical columns.
    pub vertical_share: (f64, f64),
    pub max_columns: usize,
    /// Weight of the diagonal component in the vertical+diagonal mixture.
    pub mix_diagonal: (f64, f64),
    pub mix_vertical_share: (f64, f64),
    pub mix_max_columns: usize,
    /// Dirichlet concentration for heterogeneous rows and diffuse mass.
    pub dirichlet_alpha: f64,
}

impl Default for PrototypeParams {
    fn default() -> Self {
        Self {
            sigma_frac: (0.3, 0.6),
            diagonal_floor: (0.0, 0.1),
            vertical_share: (0.7, 0.9),
            max_columns: 3,
            mix_diagonal: (0.35, 0.5),
            mix_vertical_share: (0.85, 0.95),
            mix_max_columns: 2,
            dirichlet_alpha: 1.0,
        }
    }
}

impl PrototypeParams {
    fn validate(&self, len: usize) -> Result<()> {
        let unit = |r: (f64, f64), open_lo: bool| {
            r.0 <= r.1 && r.1 <= 1.0 && if open_lo { r.0 > 0.0 } else { r.0 >= 0.0 }
        };
        let ok = self.sigma_frac.0 > 0.0
            && self.sigma_frac.0 <= self.sigma_frac.1
            && unit(self.diagonal_floor, false)
            && self.diagonal_floor.1 < 1.0
            && unit(self.vertical_share, true)
            && unit(self.mix_vertical_share, true)
            && unit(self.mix_diagonal, true)
            && self.mix_diagonal.1 < 1.0
            && (1..=len).contains(&self.max_columns)
            && (1..=len).contains(&self.mix_max_columns)
            && self.dirichlet_alpha > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("infeasible prototype parameters for L={len}: {self:?}")))
        }
    }
}

/// Synthetic row-stochastic heatmap of the requested family:
/// banded Gaussian rows (diagonal), mass on a few random columns
/// (vertical), a convex mix of the two, or Dirichlet rows (heterogeneous).
pub fn gen_prototype(kind: PatternCategory, len: usize, rng: &mut Rng, params: &PrototypeParams) -> Result<Tensor<f64>> {
    if len < 10 {
        return Err(Error::Validation(format!("prototype length {len} < 10")));
    }
    params.validate(len)?;
    let m = match kind {
        PatternCategory::Diagonal => diagonal(len, rng, params),
        PatternCategory::Vertical => vertical(len, rng, params, params.vertical_share, params.max_columns),
        PatternCategory::Heterogeneous => dirichlet(len, rng, params.dirichlet_alpha),
        PatternCategory::VerticalPlusDiagonal => {
            let lambda = sample(rng, params.mix_diagonal);
            let d = diagonal(len, rng, params);
            let v = vertical(len, rng, params, params.mix_vertical_share, params.mix_max_columns);
            let mut out = d.scale(lambda);
            out.axpy(1.0 - lambda, &v)?;
            out
        }
    };
    Ok(m)
}

fn sample(rng: &mut Rng, r: (f64, f64)) -> f64 {
    if r.0 == r.1 {
        r.0
    } else {
        rng.uniform(r.0, r.1)
    }
}

fn diagonal(len: usize, rng: &mut Rng, p: &PrototypeParams) -> Tensor<f64> {
    let sigma = sample(rng, p.sigma_frac) * default_band_width(len) as f64;
    let floor = sample(rng, p.diagonal_floor);
    let mut m = Tensor::zeros(&[len, len]);
    for q in 0..len {
        let row = m.row_mut(q);
        for (k, v) in row.iter_mut().enumerate() {
            let d = (k as f64 - q as f64) / sigma;
            *v = (-0.5 * d * d).exp();
        }
        let z: f64 = row.iter().sum();
        let u = floor / len as f64;
        row.iter_mut().for_each(|v| *v = (1.0 - floor) * *v / z + u);
    }
    m
}

fn vertical(len: usize, rng: &mut Rng, p: &PrototypeParams, share: (f64, f64), max_columns: usize) -> Tensor<f64> {
    let share = sample(rng, share);
    let n_cols = 1 + rng.below(max_columns);
    let cols: Vec<usize> = rng.permutation(len).into_iter().take(n_cols).collect();
    let mut m = dirichlet(len, rng, p.dirichlet_alpha);
    let per_col = share / n_cols as f64;
    for q in 0..len {
        let row = m.row_mut(q);
        row.iter_mut().for_each(|v| *v *= 1.0 - share);
        for &c in &cols {
            row[c] += per_col;
        }
    }
    m
}

fn dirichlet(len: usize, rng: &mut Rng, alpha: f64) -> Tensor<f64> {
    let mut m = Tensor::zeros(&[len, len]);
    for q in 0..len {
        let row = m.row_mut(q);
        row.iter_mut().for_each(|v| *v = rng.gamma(alpha));
        let z: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= z);
    }
    m
}
