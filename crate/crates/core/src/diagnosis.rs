//! Mask plans: which blocks keep global attention and which become local.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attention::MaskKind;
use crate::error::{Error, Result};
use crate::pattern::BlockPatternSummary;
use crate::toymodel::EncoderConfig;

pub const DEFAULT_RADIUS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Localize blocks whose majority pattern contains a vertical component.
    AbnormalOnly,
    AllButFirst,
    All,
    /// Inclusive, 1-based.
    Range(usize, usize),
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::AbnormalOnly => f.write_str("abnormal-only"),
            StrategyKind::AllButFirst => f.write_str("all-but-first"),
            StrategyKind::All => f.write_str("all"),
            StrategyKind::Range(a, b) => write!(f, "range:{a}-{b}"),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abnormal-only" => Ok(StrategyKind::AbnormalOnly),
            "all-but-first" => Ok(StrategyKind::AllButFirst),
            "all" => Ok(StrategyKind::All),
            _ => {
                let bad = || Error::Validation(format!("unknown strategy `{s}`"));
                let span = s.strip_prefix("range:").ok_or_else(bad)?;
                let (a, b) = span.split_once('-').ok_or_else(bad)?;
                let a = a.trim().parse().map_err(|_| bad())?;
                let b = b.trim().parse().map_err(|_| bad())?;
                Ok(StrategyKind::Range(a, b))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanStrategy {
    pub kind: StrategyKind,
    pub radius: usize,
}

impl PlanStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            radius: DEFAULT_RADIUS,
        }
    }

    pub fn with_radius(mut self, radius: usize) -> Self {
        self.radius = radius;
        self
    }
}

impl Default for PlanStrategy {
    fn default() -> Self {
        Self::new(StrategyKind::AbnormalOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub block: usize,
    pub kind: EntryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
}

impl PlanEntry {
    pub fn global(block: usize) -> Self {
        Self {
            block,
            kind: EntryKind::Global,
            radius: None,
        }
    }

    pub fn local(block: usize, radius: usize) -> Self {
        Self {
            block,
            kind: EntryKind::Local,
            radius: Some(radius),
        }
    }

    pub fn mask_kind(&self) -> MaskKind {
        match (self.kind, self.radius) {
            (EntryKind::Local, Some(r)) => MaskKind::Band(r),
            _ => MaskKind::Global,
        }
    }

    pub fn is_local(&self) -> bool {
        self.kind == EntryKind::Local
    }
}

/// JSON document: `{n_blocks, entries: [{block, kind, radius}], strategy, name}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub n_blocks: usize,
    pub entries: Vec<PlanEntry>,
    pub strategy: String,
    pub name: String,
}

impl MaskPlan {
    /// Builds a plan from explicit entries and fills in its name.
    pub fn from_entries(entries: Vec<PlanEntry>, strategy: impl Into<String>) -> Result<Self> {
        let mut plan = Self {
            n_blocks: entries.len(),
            entries,
            strategy: strategy.into(),
            name: String::new(),
        };
        plan.validate_entries()?;
        plan.name = plan_name(&plan);
        Ok(plan)
    }

    pub fn all_global(n_blocks: usize) -> Self {
        Self::from_entries((1..=n_blocks).map(PlanEntry::global).collect(), "none").expect("valid by construction")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_entries()?;
        let expect = plan_name(self);
        if self.name != expect {
            return Err(Error::Validation(format!("plan name `{}` does not match its entries (`{expect}`)", self.name)));
        }
        Ok(())
    }

    fn validate_entries(&self) -> Result<()> {
        if self.n_blocks == 0 || self.entries.len() != self.n_blocks {
            return Err(Error::Validation(format!(
                "plan declares {} blocks but has {} entries",
                self.n_blocks,
                self.entries.len()
            )));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if e.block != i + 1 {
                return Err(Error::Validation(format!("entry {i} has block id {} (expected {})", e.block, i + 1)));
            }
            match (e.kind, e.radius) {
                (EntryKind::Local, Some(r)) if r >= 1 => {}
                (EntryKind::Local, r) => {
                    return Err(Error::Validation(format!("block {}: local radius must be ≥ 1, got {r:?}", e.block)))
                }
                (EntryKind::Global, None) => {}
                (EntryKind::Global, Some(_)) => {
                    return Err(Error::Validation(format!("block {}: global entry carries a radius", e.block)))
                }
            }
        }
        Ok(())
    }

    pub fn localized(&self) -> Vec<usize> {
        self.entries.iter().filter(|e| e.is_local()).map(|e| e.block).collect()
    }

    pub fn mask_kinds(&self) -> Vec<MaskKind> {
        self.entries.iter().map(PlanEntry::mask_kind).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(s)?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Decides per block between global and local attention.
pub fn diagnose(summaries: &[BlockPatternSummary], strategy: PlanStrategy) -> Result<MaskPlan> {
    let n = summaries.len();
    if n == 0 {
        return Err(Error::Validation("no block summaries".into()));
    }
    let mut seen = vec![None; n];
    for s in summaries {
        if s.block_id == 0 || s.block_id > n {
            return Err(Error::Validation(format!("block id {} outside 1..={n}", s.block_id)));
        }
        if seen[s.block_id - 1].replace(s).is_some() {
            return Err(Error::Validation(format!("duplicate summary for block {}", s.block_id)));
        }
    }
    if strategy.radius == 0 {
        return Err(Error::Validation("local radius must be ≥ 1".into()));
    }
    if let StrategyKind::Range(a, b) = strategy.kind {
        if a == 0 || a > b || b > n {
            return Err(Error::Validation(format!("range {a}-{b} outside 1..={n}")));
        }
    }
    let entries = seen
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let block = i + 1;
            let s = s.expect("all ids present once");
            let local = match strategy.kind {
                StrategyKind::AbnormalOnly => s.majority.has_vertical(),
                StrategyKind::AllButFirst => block >= 2,
                StrategyKind::All => true,
                StrategyKind::Range(a, b) => (a..=b).contains(&block),
            };
            if local {
                PlanEntry::local(block, strategy.radius)
            } else {
                PlanEntry::global(block)
            }
        })
        .collect();
    MaskPlan::from_entries(entries, strategy.kind.to_string())
}

/// `L_B{a}-{b}` for a contiguous localized span, `Orig` when nothing is
/// localized, `L_B{i,j,…}` otherwise (the last form is this crate's
/// extension for non-contiguous sets).
pub fn plan_name(plan: &MaskPlan) -> String {
    let ids = plan.localized();
    match ids.as_slice() {
        [] => "Orig".to_string(),
        [first, .., last] if last - first + 1 == ids.len() => format!("L_B{first}-{last}"),
        [only] => format!("L_B{only}-{only}"),
        _ => {
            let list: Vec<String> = ids.iter().map(ToString::to_string).collect();
            format!("L_B{{{}}}", list.join(","))
        }
    }
}

/// Installs a plan's masks into an encoder config. Plans are an
/// architecture property fixed at construction, so this is applied before
/// `build_encoder`.
pub fn apply_plan(plan: &MaskPlan, cfg: &EncoderConfig) -> Result<EncoderConfig> {
    plan.validate()?;
    if plan.n_blocks != cfg.n_blocks {
        return Err(Error::Validation(format!(
            "plan covers {} blocks but the encoder has {}",
            plan.n_blocks, cfg.n_blocks
        )));
    }
    let out = cfg.clone().with_masks(plan.mask_kinds());
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{CategoryCounts, MeanMetrics, PatternCategory};

    pub(crate) fn summary(block_id: usize, majority: PatternCategory) -> BlockPatternSummary {
        let mut counts = CategoryCounts::default();
        counts.add(majority);
        BlockPatternSummary {
            block_id,
            per_sample: vec![],
            majority,
            counts,
            mean_metrics: MeanMetrics {
                band_mass: 0.0,
                vertical_mass: 0.0,
                entropy: 0.0,
            },
        }
    }

    /// Block 1 heterogeneous, 2–5 and 12 diagonal, 6–11 vertical+diagonal.
    fn observed_stack() -> Vec<BlockPatternSummary> {
        (1..=12)
            .map(|b| {
                let c = match b {
                    1 => PatternCategory::Heterogeneous,
                    6..=11 => PatternCategory::VerticalPlusDiagonal,
                    _ => PatternCategory::Diagonal,
                };
                summary(b, c)
            })
            .collect()
    }

    #[test]
    fn four_strategies_give_table_names() {
        let s = observed_stack();
        let name = |k| diagnose(&s, PlanStrategy::new(k)).unwrap().name;
        assert_eq!(name(StrategyKind::AbnormalOnly), "L_B6-11");
        assert_eq!(name(StrategyKind::AllButFirst), "L_B2-12");
        assert_eq!(name(StrategyKind::All), "L_B1-12");
        assert_eq!(name(StrategyKind::Range(2, 5)), "L_B2-5");
    }

    #[test]
    fn abnormal_only_skips_normal_blocks() {
        let plan = diagnose(&observed_stack(), PlanStrategy::default()).unwrap();
        for (e, s) in plan.entries.iter().zip(observed_stack()) {
            assert_eq!(e.is_local(), s.majority.has_vertical());
            if e.is_local() {
                assert_eq!(e.radius, Some(30));
            }
        }
    }

    #[test]
    fn names() {
        let mk = |local: &[usize]| {
            let entries = (1..=12)
                .map(|b| if local.contains(&b) { PlanEntry::local(b, 30) } else { PlanEntry::global(b) })
                .collect();
            MaskPlan::from_entries(entries, "test").unwrap().name
        };
        assert_eq!(mk(&(2..=12).collect::<Vec<_>>()), "L_B2-12");
        assert_eq!(mk(&[]), "Orig");
        assert_eq!(mk(&[3, 7]), "L_B{3,7}");
        assert_eq!(mk(&[4]), "L_B4-4");
    }

    #[test]
    fn invalid_summaries() {
        let mut s = observed_stack();
        s[3].block_id = 3;
        assert!(diagnose(&s, PlanStrategy::default()).is_err());
        let s = observed_stack();
        assert!(diagnose(&s[1..], PlanStrategy::default()).is_err());
        assert!(diagnose(&s, PlanStrategy::new(StrategyKind::Range(5, 13))).is_err());
        assert!(diagnose(&s, PlanStrategy::default().with_radius(0)).is_err());
    }

    #[test]
    fn strategy_parsing() {
        for s in ["abnormal-only", "all-but-first", "all", "range:2-5"] {
            assert_eq!(s.parse::<StrategyKind>().unwrap().to_string(), s);
        }
        assert!("range:5".parse::<StrategyKind>().is_err());
        assert!("most".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let plan = diagnose(&observed_stack(), PlanStrategy::default()).unwrap();
        let text = plan.to_json().unwrap();
        assert!(text.contains("\"n_blocks\": 12"));
        assert_eq!(MaskPlan::from_json(&text).unwrap(), plan);
        let tampered = text.replace("L_B6-11", "L_B6-10");
        assert!(MaskPlan::from_json(&tampered).is_err());
    }

    #[test]
    fn apply_plan_installs_masks() {
        let cfg = EncoderConfig::new(12, 8, 2, 16, 64);
        let plan = MaskPlan::from_entries(
            (1..=12)
                .map(|b| if b >= 2 { PlanEntry::local(b, DEFAULT_RADIUS) } else { PlanEntry::global(b) })
                .collect(),
            "all-but-first",
        )
        .unwrap();
        assert_eq!(plan.name, "L_B2-12");
        let out = apply_plan(&plan, &cfg).unwrap();
        assert_eq!(out.mask(0), MaskKind::Global);
        for b in 1..12 {
            assert_eq!(out.mask(b), MaskKind::Band(30));
        }
        let identity = apply_plan(&MaskPlan::all_global(12), &cfg).unwrap();
        assert!(identity.masks.iter().all(|m| *m == MaskKind::Global));
    }

    #[test]
    fn apply_plan_rejects_depth_mismatch() {
        let cfg = EncoderConfig::new(4, 8, 2, 16, 64);
        assert!(matches!(apply_plan(&MaskPlan::all_global(5), &cfg), Err(Error::Validation(_))));
    }
}
