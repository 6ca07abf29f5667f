use super::AttentionMap;
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Attention captured from one block for one input: every head's weights
/// plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord<T = f32> {
    /// 1-based block index.
    pub block_id: usize,
    pub per_head: Vec<AttentionMap<T>>,
    pub mean: AttentionMap<T>,
}

impl<T: Scalar> AttentionRecord<T> {
    pub fn new(block_id: usize, per_head: Vec<AttentionMap<T>>) -> Result<Self> {
        let mean = AttentionMap::average(&per_head)?;
        Ok(Self {
            block_id,
            per_head,
            mean,
        })
    }

    /// Record whose per-head data was not kept.
    pub fn mean_only(block_id: usize, mean: AttentionMap<T>) -> Self {
        Self {
            block_id,
            per_head: Vec::new(),
            mean,
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn n_heads(&self) -> usize {
        self.per_head.len()
    }
}

/// Elementwise average of the per-head maps as a dense `L×L` matrix.
/// Falls back to the stored mean when per-head data is absent.
pub fn mean_attention<T: Scalar>(rec: &AttentionRecord<T>) -> Result<Tensor<T>> {
    if rec.per_head.is_empty() {
        if rec.mean.is_empty() {
            return Err(Error::Precondition("record has no heads".into()));
        }
        return Ok(rec.mean.to_dense());
    }
    Ok(AttentionMap::average(&rec.per_head)?.to_dense())
}
