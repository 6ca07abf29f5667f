//! Heatmap metrics, the four-way pattern taxonomy and per-block summaries.

mod aggregate;
mod category;
mod metrics;
mod prototype;

pub use aggregate::{aggregate_block, BlockPatternSummary, CategoryCounts, MeanMetrics, SampleResult};
pub use category::{classify, PatternCategory};
pub use metrics::{compute_metrics, default_band_width, ClassifierThresholds, PatternMetrics};
pub use prototype::{gen_prototype, PrototypeParams};
