use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Row-sum tolerance accepted by [`compute_metrics`].
pub const STOCHASTIC_TOL: f64 = 1e-4;

/// `max(2, ⌈0.05·L⌉)`
pub fn default_band_width(len: usize) -> usize {
    ((len as f64 * 0.05).ceil() as usize).max(2)
}

/// Tunable numerics of the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierThresholds {
    /// Half-width of the diagonal band; `None` scales with the heatmap length.
    pub band_width: Option<usize>,
    /// A column is vertical when its mean weight is at least `kappa / L`.
    pub kappa: f64,
    /// Minimum off-band vertical mass for a vertical pattern.
    pub theta_v: f64,
    /// Minimum band mass for a pure diagonal pattern.
    pub theta_d: f64,
    /// Minimum band mass for the diagonal half of vertical+diagonal.
    pub theta_d_lo: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            band_width: None,
            kappa: 10.0,
            theta_v: 0.15,
            theta_d: 0.40,
            theta_d_lo: 0.20,
        }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.theta_d_lo
            && self.theta_d_lo <= self.theta_d
            && self.theta_d < 1.0
            && 0.0 < self.theta_v
            && self.theta_v < 1.0
            && self.kappa > 1.0
            && self.band_width.is_none_or(|w| w >= 1);
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("inconsistent classifier thresholds: {self:?}")))
        }
    }

    pub fn band_width_for(&self, len: usize) -> usize {
        self.band_width.unwrap_or_else(|| default_band_width(len))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub len: usize,
    /// Band half-width the metrics were computed with.
    pub band_width: usize,
    /// Mean over queries of the attention mass with `|q − k| ≤ w`.
    pub band_mass: f64,
    /// Keys whose column mean reaches `kappa / L`.
    pub vertical_columns: Vec<usize>,
    /// Off-band mass landing in vertical columns, normalized by `L`.
    pub vertical_mass: f64,
    /// Mean row entropy in nats.
    pub entropy: f64,
}

/// Metrics of a row-stochastic `L×L` heatmap (rows are queries).
pub fn compute_metrics<T: Scalar>(mean_attn: &Tensor<T>, th: &ClassifierThresholds) -> Result<PatternMetrics> {
    th.validate()?;
    let shape = mean_attn.shape();
    if shape.len() != 2 || shape[0] != shape[1] {
        return Err(Error::dim("compute_metrics", shape, &[]));
    }
    let len = shape[0];
    if len < 2 {
        return Err(Error::Validation(format!("heatmap length {len} < 2")));
    }
    check_stochastic(mean_attn)?;

    let w = th.band_width_for(len);
    let inv_len = 1.0 / len as f64;
    let mut band = 0.0;
    let mut entropy = 0.0;
    let mut col_sum = vec![0.0; len];
    for q in 0..len {
        let row = mean_attn.row(q);
        let lo = q.saturating_sub(w);
        let hi = (q + w + 1).min(len);
        band += row[lo..hi].iter().map(|v| v.as_f64()).sum::<f64>();
        let mut h = 0.0;
        for (k, &v) in row.iter().enumerate() {
            let p = v.as_f64();
            col_sum[k] += p;
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        entropy += h;
    }
    let cutoff = th.kappa * inv_len;
    let vertical_columns: Vec<usize> = (0..len).filter(|&k| col_sum[k] * inv_len >= cutoff).collect();
    let mut vertical = 0.0;
    for &k in &vertical_columns {
        for q in 0..len {
            if q.abs_diff(k) > w {
                vertical += mean_attn.at(q, k).as_f64();
            }
        }
    }
    Ok(PatternMetrics {
        len,
        band_width: w,
        band_mass: (band * inv_len).clamp(0.0, 1.0),
        vertical_columns,
        vertical_mass: (vertical * inv_len).clamp(0.0, 1.0),
        entropy: (entropy * inv_len).clamp(0.0, (len as f64).ln()),
    })
}

fn check_stochastic<T: Scalar>(m: &Tensor<T>) -> Result<()> {
    let mut worst = (0, 0.0f64);
    for q in 0..m.rows() {
        let row = m.row(q);
        if let Some(k) = row.iter().position(|v| !v.is_finite() || v.as_f64() < -STOCHASTIC_TOL) {
            return Err(Error::Validation(format!(
                "entry ({q}, {k}) = {} is not a valid probability",
                row[k]
            )));
        }
        let err = (row.iter().map(|v| v.as_f64()).sum::<f64>() - 1.0).abs();
        if err > worst.1 {
            worst = (q, err);
        }
    }
    if worst.1 > STOCHASTIC_TOL {
        return Err(Error::Validation(format!(
            "heatmap is not row-stochastic: row {} deviates from 1 by {:.3e}",
            worst.0, worst.1
        )));
    }
    Ok(())
}
