//! Multi-head self-attention with optional banded (local) masking.
//!
//! A band of radius `r` lets query `q` attend to key `k` iff `|q − k| ≤ r`.
//! Radii are counted in transformer input positions. Banded heads compute
//! and store only the `2r + 1` allowed logits per row, so their cost is
//! `O(L·r)` instead of `O(L²)`.

mod kernel;
mod map;
mod mask;
mod msa;
mod record;

pub use kernel::{attend, attention_backward, scaled_dot_attention, AttentionGrads};
pub use map::AttentionMap;
pub use mask::{build_band_mask, AttentionMask, MaskKind};
pub use msa::{msa_backward, msa_forward, msa_forward_cached, HeadWeights, MsaCache, MsaConfig, MsaGrads, MsaWeights};
pub use record::{mean_attention, AttentionRecord};
