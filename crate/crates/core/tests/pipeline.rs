use attnscope::attention::{AttentionMap, AttentionRecord, MaskKind};
use attnscope::bench::bench_attention;
use attnscope::diagnosis::{apply_plan, MaskPlan, PlanEntry, PlanStrategy, StrategyKind};
use attnscope::io::{classify_corpus, decode_atn, encode_atn};
use attnscope::pattern::{gen_prototype, ClassifierThresholds, PatternCategory};
use attnscope::toymodel::{build_encoder, extract_attention, EncoderConfig};
use attnscope::{Rng, Tensor};
use proptest::prelude::*;

fn prototype_dump(kinds: &[PatternCategory], len: usize, rng: &mut Rng) -> Vec<AttentionRecord> {
    kinds
        .iter()
        .enumerate()
        .map(|(b, &k)| {
            let m = gen_prototype(k, len, rng, &Default::default()).unwrap();
            AttentionRecord::new(b + 1, vec![AttentionMap::from_dense(&m.cast()).unwrap()]).unwrap()
        })
        .collect()
}

#[test]
fn dumps_to_plan_to_model() {
    use PatternCategory::*;
    let kinds = [Heterogeneous, Diagonal, VerticalPlusDiagonal, Vertical];
    let mut rng = Rng::seed_from(4);
    let samples: Vec<(String, Vec<AttentionRecord>)> = (0..6)
        .map(|i| {
            let bytes = encode_atn(&prototype_dump(&kinds, 80, &mut rng)).unwrap();
            (format!("utt{i}"), decode_atn(&bytes).unwrap().records)
        })
        .collect();
    let report = classify_corpus(&samples, &ClassifierThresholds::default(), PlanStrategy::default()).unwrap();
    assert_eq!(report.plan.name, "L_B3-4");

    let cfg = apply_plan(&report.plan, &EncoderConfig::new(4, 8, 2, 16, 96)).unwrap();
    assert_eq!(cfg.masks, vec![MaskKind::Global, MaskKind::Global, MaskKind::Band(30), MaskKind::Band(30)]);
    let model = build_encoder::<f32>(&cfg, &mut Rng::seed_from(1)).unwrap();
    let x: Tensor<f32> = Rng::seed_from(2).normal_tensor(&[96, 8], 1.0);
    let recs = extract_attention(&model, &x).unwrap();
    assert_eq!(recs.iter().map(|r| r.block_id).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    for rec in &recs[2..] {
        let m = rec.mean.to_dense();
        for q in 0..96usize {
            for k in 0..96 {
                if q.abs_diff(k) > 30 {
                    assert_eq!(m.at(q, k), 0.0);
                }
            }
        }
    }
}

#[test]
fn wide_band_plan_matches_global_model() {
    let base = EncoderConfig::new(2, 8, 2, 16, 20);
    let plan = MaskPlan::from_entries(vec![PlanEntry::local(1, 19), PlanEntry::local(2, 50)], "all").unwrap();
    let banded = build_encoder::<f64>(&apply_plan(&plan, &base).unwrap(), &mut Rng::seed_from(5)).unwrap();
    let global = build_encoder::<f64>(&base, &mut Rng::seed_from(5)).unwrap();
    let x: Tensor<f64> = Rng::seed_from(6).normal_tensor(&[20, 8], 1.0);
    let a = banded.forward(&x, &[3, 4]).unwrap().0;
    let b = global.forward(&x, &[3, 4]).unwrap().0;
    assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
}

#[test]
fn full_width_band_costs_the_same_as_global() {
    let r = bench_attention(384, 383, 64, 2, 7, 3).unwrap();
    assert!((0.8..=1.25).contains(&r.ratio), "{r:?}");
}

fn arb_plan() -> impl Strategy<Value = (usize, Vec<Option<usize>>)> {
    (1usize..24).prop_flat_map(|len| (Just(len), prop::collection::vec(prop::option::of(1usize..30), 1..4)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extracted_records_respect_any_plan((len, blocks) in arb_plan(), seed: u64) {
        let entries = blocks
            .iter()
            .enumerate()
            .map(|(i, r)| match r {
                Some(r) => PlanEntry::local(i + 1, *r),
                None => PlanEntry::global(i + 1),
            })
            .collect();
        let plan = MaskPlan::from_entries(entries, "custom").unwrap();
        let cfg = apply_plan(&plan, &EncoderConfig::new(blocks.len(), 4, 2, 8, 32)).unwrap();
        let mut rng = Rng::seed_from(seed);
        let model = build_encoder::<f32>(&cfg, &mut rng).unwrap();
        let x: Tensor<f32> = rng.normal_tensor(&[len, 4], 1.0);
        for (rec, r) in extract_attention(&model, &x).unwrap().iter().zip(&blocks) {
            for m in rec.per_head.iter().chain(std::iter::once(&rec.mean)) {
                let d = m.to_dense();
                for q in 0..len {
                    let s: f32 = d.row(q).iter().sum();
                    prop_assert!((s - 1.0).abs() <= 1e-5);
                    for k in 0..len {
                        if let Some(r) = r {
                            if q.abs_diff(k) > *r {
                                prop_assert_eq!(d.at(q, k), 0.0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn localized_blocks_are_never_vertical(len in 40usize..120, seed: u64) {
        // r ≤ w: every cell Vm counts is outside the band and therefore zero.
        let w = attnscope::pattern::default_band_width(len);
        let cfg = EncoderConfig::new(2, 8, 2, 16, 128).with_masks(vec![MaskKind::Global, MaskKind::Band(w)]);
        let mut rng = Rng::seed_from(seed);
        let model = build_encoder::<f32>(&cfg, &mut rng).unwrap();
        let x: Tensor<f32> = rng.normal_tensor(&[len, 8], 1.0);
        let recs = extract_attention(&model, &x).unwrap();
        let samples = vec![("x".to_string(), recs)];
        let report = classify_corpus(&samples, &ClassifierThresholds::default(), PlanStrategy::new(StrategyKind::All)).unwrap();
        let m = &report.blocks[1].per_sample[0];
        prop_assert_eq!(m.metrics.vertical_mass, 0.0);
        prop_assert!(!m.category.has_vertical());
    }
}
