use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ClassifierThresholds, PatternMetrics};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternCategory {
    Vertical,
    Diagonal,
    VerticalPlusDiagonal,
    Heterogeneous,
}

impl PatternCategory {
    pub const ALL: [PatternCategory; 4] = [
        PatternCategory::Vertical,
        PatternCategory::Diagonal,
        PatternCategory::VerticalPlusDiagonal,
        PatternCategory::Heterogeneous,
    ];

    /// Tie-break rank, higher is more severe.
    pub fn severity(self) -> u8 {
        match self {
            PatternCategory::VerticalPlusDiagonal => 3,
            PatternCategory::Vertical => 2,
            PatternCategory::Diagonal => 1,
            PatternCategory::Heterogeneous => 0,
        }
    }

    /// Vertical and vertical+diagonal are the abnormal patterns.
    pub fn has_vertical(self) -> bool {
        matches!(self, PatternCategory::Vertical | PatternCategory::VerticalPlusDiagonal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PatternCategory::Vertical => "vertical",
            PatternCategory::Diagonal => "diagonal",
            PatternCategory::VerticalPlusDiagonal => "vertical-plus-diagonal",
            PatternCategory::Heterogeneous => "heterogeneous",
        }
    }
}

impl fmt::Display for PatternCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vertical" | "v" => Ok(PatternCategory::Vertical),
            "diagonal" | "d" => Ok(PatternCategory::Diagonal),
            "vertical-plus-diagonal" | "vertical+diagonal" | "v+d" | "vd" => Ok(PatternCategory::VerticalPlusDiagonal),
            "heterogeneous" | "h" => Ok(PatternCategory::Heterogeneous),
            other => Err(Error::Validation(format!("unknown pattern category `{other}`"))),
        }
    }
}

/// First matching rule wins:
/// vertical+diagonal, vertical, diagonal, heterogeneous.
pub fn classify(m: &PatternMetrics, th: &ClassifierThresholds) -> PatternCategory {
    let vertical = m.vertical_mass >= th.theta_v;
    if vertical && m.band_mass >= th.theta_d_lo {
        PatternCategory::VerticalPlusDiagonal
    } else if vertical {
        PatternCategory::Vertical
    } else if m.band_mass >= th.theta_d {
        PatternCategory::Diagonal
    } else {
        PatternCategory::Heterogeneous
    }
}
