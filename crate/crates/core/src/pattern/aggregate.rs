use serde::{Deserialize, Serialize};

use super::{classify, compute_metrics, ClassifierThresholds, PatternCategory, PatternMetrics};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample: String,
    pub category: PatternCategory,
    pub metrics: PatternMetrics,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub vertical: usize,
    pub diagonal: usize,
    pub vertical_plus_diagonal: usize,
    pub heterogeneous: usize,
}

impl CategoryCounts {
    pub fn get(&self, c: PatternCategory) -> usize {
        match c {
            PatternCategory::Vertical => self.vertical,
            PatternCategory::Diagonal => self.diagonal,
            PatternCategory::VerticalPlusDiagonal => self.vertical_plus_diagonal,
            PatternCategory::Heterogeneous => self.heterogeneous,
        }
    }

    pub fn add(&mut self, c: PatternCategory) {
        match c {
            PatternCategory::Vertical => self.vertical += 1,
            PatternCategory::Diagonal => self.diagonal += 1,
            PatternCategory::VerticalPlusDiagonal => self.vertical_plus_diagonal += 1,
            PatternCategory::Heterogeneous => self.heterogeneous += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.vertical + self.diagonal + self.vertical_plus_diagonal + self.heterogeneous
    }

    /// Most frequent category; ties go to the more severe one.
    pub fn majority(&self) -> PatternCategory {
        PatternCategory::ALL
            .into_iter()
            .max_by_key(|&c| (self.get(c), c.severity()))
            .expect("four categories")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub band_mass: f64,
    pub vertical_mass: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPatternSummary {
    pub block_id: usize,
    /// Sorted by sample id.
    pub per_sample: Vec<SampleResult>,
    pub majority: PatternCategory,
    pub counts: CategoryCounts,
    pub mean_metrics: MeanMetrics,
}

impl BlockPatternSummary {
    /// Rebuilds counts, majority and means from `per_sample`.
    pub fn from_results(block_id: usize, mut per_sample: Vec<SampleResult>) -> Result<Self> {
        if per_sample.is_empty() {
            return Err(Error::Validation(format!("block {block_id}: no samples")));
        }
        per_sample.sort_by(|a, b| {
            a.sample
                .cmp(&b.sample)
                .then(a.category.cmp(&b.category))
                .then(a.metrics.band_mass.total_cmp(&b.metrics.band_mass))
                .then(a.metrics.vertical_mass.total_cmp(&b.metrics.vertical_mass))
                .then(a.metrics.entropy.total_cmp(&b.metrics.entropy))
        });
        let mut counts = CategoryCounts::default();
        let (mut d, mut v, mut h) = (0.0, 0.0, 0.0);
        for s in &per_sample {
            counts.add(s.category);
            d += s.metrics.band_mass;
            v += s.metrics.vertical_mass;
            h += s.metrics.entropy;
        }
        let n = per_sample.len() as f64;
        Ok(Self {
            block_id,
            majority: counts.majority(),
            counts,
            mean_metrics: MeanMetrics {
                band_mass: d / n,
                vertical_mass: v / n,
                entropy: h / n,
            },
            per_sample,
        })
    }
}

/// Classifies every sample heatmap of one block and summarizes the block.
/// The result does not depend on the order of `samples`.
pub fn aggregate_block<T: Scalar>(
    block_id: usize,
    samples: &[(String, Tensor<T>)],
    th: &ClassifierThresholds,
) -> Result<BlockPatternSummary> {
    if samples.is_empty() {
        return Err(Error::Validation(format!("block {block_id}: empty sample list")));
    }
    let results = samples
        .iter()
        .map(|(id, m)| {
            let metrics = compute_metrics(m, th).map_err(|e| Error::Validation(format!("{id}: {e}")))?;
            Ok(SampleResult {
                sample: id.clone(),
                category: classify(&metrics, th),
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BlockPatternSummary::from_results(block_id, results)
}
