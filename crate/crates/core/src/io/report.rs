use serde::{Deserialize, Serialize};

use crate::attention::{mean_attention, AttentionRecord};
use crate::diagnosis::{diagnose, MaskPlan, PlanStrategy};
use crate::error::{Error, Result};
use crate::numerics::Scalar;
use crate::pattern::{aggregate_block, BlockPatternSummary, ClassifierThresholds};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub samples: Vec<String>,
    pub n_blocks: usize,
}

/// Classification and plan for a corpus of attention dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub corpus: CorpusInfo,
    pub thresholds: ClassifierThresholds,
    pub blocks: Vec<BlockPatternSummary>,
    pub plan: MaskPlan,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.version != REPORT_VERSION {
            return Err(Error::Validation(format!(
                "report version {} unsupported (expected {REPORT_VERSION})",
                r.version
            )));
        }
        r.plan.validate()?;
        Ok(r)
    }
}

/// Classifies every block's mean attention across samples and derives a
/// mask plan. Each sample is one dump with the same number of blocks.
pub fn classify_corpus<T: Scalar>(
    samples: &[(String, Vec<AttentionRecord<T>>)],
    th: &ClassifierThresholds,
    strategy: PlanStrategy,
) -> Result<Report> {
    th.validate()?;
    let n_blocks = samples
        .first()
        .map(|(_, r)| r.len())
        .ok_or_else(|| Error::Validation("no samples to classify".into()))?;
    if let Some((id, r)) = samples.iter().find(|(_, r)| r.len() != n_blocks) {
        return Err(Error::Validation(format!(
            "sample {id} has {} blocks, expected {n_blocks}",
            r.len()
        )));
    }
    let mut blocks = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let mats = samples
            .iter()
            .map(|(id, recs)| Ok((id.clone(), mean_attention(&recs[b])?)))
            .collect::<Result<Vec<_>>>()?;
        blocks.push(aggregate_block(b + 1, &mats, th)?);
    }
    let plan = diagnose(&blocks, strategy)?;
    Ok(Report {
        version: REPORT_VERSION,
        corpus: CorpusInfo {
            samples: samples.iter().map(|(id, _)| id.clone()).collect(),
            n_blocks,
        },
        thresholds: *th,
        blocks,
        plan,
    })
}
