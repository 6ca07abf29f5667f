use serde::{Deserialize, Serialize};

use crate::attention::{MaskKind, MsaConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub n_blocks: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
    /// One entry per block; empty means all global.
    #[serde(default)]
    pub masks: Vec<MaskKind>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl EncoderConfig {
    pub fn new(n_blocks: usize, d_model: usize, n_heads: usize, d_ff: usize, max_len: usize) -> Self {
        Self {
            n_blocks,
            d_model,
            n_heads,
            d_ff,
            max_len,
            masks: vec![MaskKind::Global; n_blocks],
        }
    }

    /// Reference configuration of the training acceptance run.
    pub fn reference() -> Self {
        Self::new(4, 32, 4, 64, 128)
    }

    pub fn with_masks(mut self, masks: Vec<MaskKind>) -> Self {
        self.masks = masks;
        self
    }

    pub fn msa(&self) -> MsaConfig {
        MsaConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
        }
    }

    pub fn mask(&self, block: usize) -> MaskKind {
        self.masks.get(block).copied().unwrap_or(MaskKind::Global)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 || self.d_ff == 0 || self.max_len == 0 {
            return Err(Error::Validation(format!("degenerate encoder config: {self:?}")));
        }
        if !self.masks.is_empty() && self.masks.len() != self.n_blocks {
            return Err(Error::Validation(format!(
                "{} masks for {} blocks",
                self.masks.len(),
                self.n_blocks
            )));
        }
        self.msa().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Probability that a position starts a masked span.
    pub mask_prob: f64,
    pub span_len: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            learning_rate: 0.02,
            batch_size: 8,
            mask_prob: 0.065,
            span_len: 4,
            seed: 2021,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_prob) || self.span_len == 0 || self.batch_size == 0 {
            return Err(Error::Validation(format!("invalid training config: {self:?}")));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Validation(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub sequences: usize,
    pub length: usize,
    pub width: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            sequences: 256,
            length: 64,
            width: 32,
            seed: 7,
        }
    }
}
