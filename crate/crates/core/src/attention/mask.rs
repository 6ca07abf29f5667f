use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "radius", rename_all = "lowercase")]
pub enum MaskKind {
    Global,
    Band(usize),
}

impl MaskKind {
    pub fn radius(self) -> Option<usize> {
        match self {
            MaskKind::Global => None,
            MaskKind::Band(r) => Some(r),
        }
    }
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskKind::Global => f.write_str("global"),
            MaskKind::Band(r) => write!(f, "band(r={r})"),
        }
    }
}

/// Mask for a sequence of a given length. Every row allows a contiguous
/// key range that always contains the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionMask {
    pub kind: MaskKind,
    pub len: usize,
}

pub fn build_band_mask(len: usize, radius: usize) -> Result<AttentionMask> {
    AttentionMask::new(MaskKind::Band(radius), len)
}

impl AttentionMask {
    pub fn new(kind: MaskKind, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptySequence);
        }
        Ok(Self { kind, len })
    }

    pub fn global(len: usize) -> Result<Self> {
        Self::new(MaskKind::Global, len)
    }

    /// True when the band covers every pair.
    pub fn is_full(&self) -> bool {
        match self.kind {
            MaskKind::Global => true,
            MaskKind::Band(r) => r + 1 >= self.len,
        }
    }

    #[inline]
    pub fn key_range(&self, q: usize) -> Range<usize> {
        match self.kind {
            MaskKind::Global => 0..self.len,
            MaskKind::Band(r) => q.saturating_sub(r)..(q.saturating_add(r).saturating_add(1)).min(self.len),
        }
    }

    #[inline]
    pub fn allowed(&self, q: usize, k: usize) -> bool {
        self.key_range(q).contains(&k)
    }

    /// Maximum number of keys any row may attend to.
    pub fn width(&self) -> usize {
        match self.kind {
            MaskKind::Global => self.len,
            MaskKind::Band(r) => r.saturating_mul(2).saturating_add(1).min(self.len),
        }
    }

    pub fn to_bool_matrix(&self) -> Vec<bool> {
        let n = self.len;
        let mut out = vec![false; n * n];
        for q in 0..n {
            for k in self.key_range(q) {
                out[q * n + k] = true;
            }
        }
        out
    }
}
