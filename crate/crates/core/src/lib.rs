//! Attention-pattern diagnostics for transformer encoders.
//!
//! The crate provides multi-head self-attention with a banded (local)
//! variant, a four-way taxonomy for attention heatmaps (vertical, diagonal,
//! vertical+diagonal, heterogeneous), per-block summaries over a sample
//! corpus, and mask plans that localize the blocks diagnosed as abnormal.
//! A small masked-reconstruction encoder exercises the whole pipeline on
//! trained attention maps.

pub mod attention;
pub mod bench;
pub mod diagnosis;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod numerics;
pub mod pattern;
pub mod toymodel;

pub use attention::{AttentionMap, AttentionMask, AttentionRecord, MaskKind};
pub use diagnosis::MaskPlan;
pub use error::{Error, FormatError, Result};
pub use numerics::{Rng, Scalar, Tensor};
pub use pattern::{ClassifierThresholds, PatternCategory};
