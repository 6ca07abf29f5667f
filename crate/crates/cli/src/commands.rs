use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use attnscope::attention::{AttentionMap, AttentionRecord};
use attnscope::diagnosis::{apply_plan, diagnose, MaskPlan, PlanStrategy, StrategyKind};
use attnscope::io::{self, Report, ToyConfig};
use attnscope::pattern::{gen_prototype, ClassifierThresholds, PatternCategory};
use attnscope::toymodel::{build_encoder, extract_attention, smoothed_endpoints, train, CorpusConfig, SyntheticCorpus, SMOOTH_WINDOW};
use attnscope::{gradcheck as gc, Error, Rng};

use crate::{collect_atn, ensure_dir, Bench, Classify, Extract, GenSynth, Gradcheck, Plan, Render, TrainToy};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn strategy(name: &str, radius: usize) -> Result<PlanStrategy> {
    Ok(PlanStrategy::new(name.parse::<StrategyKind>()?).with_radius(radius))
}

pub fn gen_synth(a: &GenSynth) -> Result<ExitCode> {
    ensure_dir(&a.out)?;
    if a.count == 0 {
        return Err(Error::Validation("--count must be ≥ 1".into()).into());
    }
    if a.kind == "corpus" {
        let corpus = SyntheticCorpus::<f32>::generate(&CorpusConfig {
            sequences: a.count,
            length: a.length,
            width: a.width,
            seed: a.seed,
        })?;
        let path = a.out.join("corpus.seq");
        io::write_corpus(&corpus, &path)?;
        println!("wrote {} sequences of {}x{} to {}", a.count, a.length, a.width, path.display());
        return Ok(ExitCode::SUCCESS);
    }
    let kinds = a
        .kind
        .split(',')
        .map(|k| k.trim().parse::<PatternCategory>())
        .collect::<attnscope::Result<Vec<_>>>()?;
    let prefix = match kinds.as_slice() {
        [one] => one.as_str(),
        _ => "sample",
    };
    let root = Rng::seed_from(a.seed);
    for i in 0..a.count {
        let mut rng = root.split(i as u64);
        let records = kinds
            .iter()
            .enumerate()
            .map(|(b, &kind)| {
                let m = gen_prototype(kind, a.length, &mut rng, &Default::default())?;
                AttentionRecord::new(b + 1, vec![AttentionMap::from_dense(&m.cast::<f32>())?])
            })
            .collect::<attnscope::Result<Vec<_>>>()?;
        io::write_atn(&records, a.out.join(format!("{prefix}_{i:04}.atn")))?;
    }
    println!("wrote {} files with {} blocks to {}", a.count, kinds.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn thresholds(path: &Option<PathBuf>) -> Result<ClassifierThresholds> {
    Ok(match path {
        Some(p) => io::load_thresholds(p)?,
        None => io::thresholds_from_env()?,
    })
}

pub fn classify(a: &Classify) -> Result<ExitCode> {
    let th = thresholds(&a.thresholds)?;
    let strat = strategy(&a.strategy, a.radius)?;
    let files = collect_atn(&a.inputs)?;
    let mut samples = Vec::with_capacity(files.len());
    for f in &files {
        let dump = io::read_atn(f).with_context(|| format!("reading {}", f.display()))?;
        let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        samples.push((id, dump.records));
    }
    let report = io::classify_corpus(&samples, &th, strat)?;
    write_text(&a.out, &report.to_json()?)?;
    for b in &report.blocks {
        println!(
            "block {:>2}: {:<22} D={:.3} Vm={:.3} H={:.3}",
            b.block_id, b.majority, b.mean_metrics.band_mass, b.mean_metrics.vertical_mass, b.mean_metrics.entropy
        );
    }
    println!("plan {}", report.plan.name);
    Ok(ExitCode::SUCCESS)
}

pub fn plan(a: &Plan) -> Result<ExitCode> {
    let report = Report::from_json(&read_text(&a.report)?)?;
    let plan = diagnose(&report.blocks, strategy(&a.strategy, a.radius)?)?;
    write_text(&a.out, &plan.to_json()?)?;
    println!("{}", plan.name);
    Ok(ExitCode::SUCCESS)
}

pub fn render(a: &Render) -> Result<ExitCode> {
    let dump = io::read_atn(&a.input)?;
    ensure_dir(&a.out)?;
    let selected: Vec<&AttentionRecord> = match a.block {
        Some(b) => vec![dump
            .records
            .iter()
            .find(|r| r.block_id == b)
            .ok_or_else(|| Error::Validation(format!("block {b} not in file ({} blocks)", dump.records.len())))?],
        None => dump.records.iter().collect(),
    };
    let mut written = 0;
    for rec in selected {
        io::render_heatmap(&rec.mean.to_dense(), a.out.join(format!("block_{:02}.pgm", rec.block_id)), a.gamma)?;
        written += 1;
        if a.heads {
            for (h, m) in rec.per_head.iter().enumerate() {
                let name = format!("block_{:02}_head_{h:02}.pgm", rec.block_id);
                io::render_heatmap(&m.to_dense(), a.out.join(name), a.gamma)?;
                written += 1;
            }
        }
    }
    println!("wrote {written} images to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn train_toy(a: &TrainToy) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(p) => io::load_toy_config(p)?,
        None => ToyConfig::default(),
    };
    if let Some(p) = &a.plan {
        let plan = MaskPlan::from_json(&read_text(p)?)?;
        cfg.encoder = apply_plan(&plan, &cfg.encoder)?;
    }
    let corpus = match &a.corpus {
        Some(p) => io::read_corpus(p)?,
        None => SyntheticCorpus::generate(&cfg.corpus)?,
    };
    let model = build_encoder::<f32>(&cfg.encoder, &mut Rng::seed_from(cfg.train.seed).split(0))?;
    let out = train(model, &corpus, &cfg.train)?;
    io::save_checkpoint(&out.model, &a.out)?;
    if let Some(p) = &a.curves {
        io::write_curve(&out.losses, p)?;
    }
    match smoothed_endpoints(&out.losses, SMOOTH_WINDOW) {
        Some((first, last)) => println!(
            "steps {} smoothed loss {first:.4} -> {last:.4} (ratio {:.4})",
            out.losses.len(),
            last / first
        ),
        None => println!("steps {}", out.losses.len()),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn extract(a: &Extract) -> Result<ExitCode> {
    let model = io::load_checkpoint(&a.ckpt)?;
    let corpus = io::read_corpus(&a.input)?;
    ensure_dir(&a.out)?;
    let n = a.limit.unwrap_or(corpus.len()).min(corpus.len());
    for (i, seq) in corpus.sequences()[..n].iter().enumerate() {
        let records = extract_attention(&model, seq)?;
        io::write_atn(&records, a.out.join(format!("seq_{i:04}.atn")))?;
    }
    println!("wrote {n} dumps with {} blocks to {}", model.cfg.n_blocks, a.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn gradcheck(a: &Gradcheck) -> Result<ExitCode> {
    let results = if a.f64 {
        gc::run_all::<f64>(a.seeds)?
    } else {
        gc::run_all::<f32>(a.seeds)?
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&results)?);
    } else {
        for r in &results {
            println!(
                "{:<11} {} seeds={} max_rel_err={:.3e} tol={:.0e} {}",
                r.name,
                r.precision,
                r.seeds,
                r.max_rel_err,
                r.tolerance,
                if r.passed() { "ok" } else { "FAILED" }
            );
        }
    }
    Ok(if results.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

pub fn bench(a: &Bench) -> Result<ExitCode> {
    let r = attnscope::bench::bench_attention(a.length, a.radius, a.d_model, a.heads, a.repeats, a.seed)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        println!(
            "L={} r={} d_model={} H={}: global {:.4}s banded {:.4}s ratio {:.2} (max |Δ| {:.1e})",
            r.len, r.radius, r.d_model, r.n_heads, r.dense_time, r.banded_time, r.ratio, r.banded_max_abs_diff
        );
    }
    Ok(ExitCode::SUCCESS)
}
