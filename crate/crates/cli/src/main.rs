use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "attnscope", version, about = "Attention pattern analysis and banded self-attention toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate prototype attention dumps or a synthetic training corpus.
    GenSynth(GenSynth),
    /// Classify attention dumps per block and write a JSON report.
    Classify(Classify),
    /// Derive a mask plan from a report.
    Plan(Plan),
    /// Render mean attention of an ATN1 file as PGM heatmaps.
    Render(Render),
    /// Train the toy encoder with masked reconstruction.
    TrainToy(TrainToy),
    /// Run a checkpoint over a corpus and dump its attention.
    Extract(Extract),
    /// Check analytic gradients against finite differences.
    Gradcheck(Gradcheck),
    /// Time global against banded attention.
    Bench(Bench),
}

#[derive(Args)]
pub struct GenSynth {
    /// `corpus`, or one category per block, comma separated (v, d, v+d, h).
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 100)]
    pub length: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Channel count of corpus sequences.
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct Classify {
    /// ATN1 files or directories containing them.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// TOML thresholds; falls back to $ATTNSCOPE_THRESHOLDS, then defaults.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    #[arg(long, default_value = "abnormal-only")]
    pub strategy: String,
    #[arg(long, default_value_t = attnscope::diagnosis::DEFAULT_RADIUS)]
    pub radius: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct Plan {
    #[arg(long)]
    pub report: PathBuf,
    /// abnormal-only | all-but-first | all | range:a-b
    #[arg(long, default_value = "abnormal-only")]
    pub strategy: String,
    #[arg(long, default_value_t = attnscope::diagnosis::DEFAULT_RADIUS)]
    pub radius: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct Render {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Block id (1-based); all blocks when omitted.
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Also render every head.
    #[arg(long)]
    pub heads: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainToy {
    /// TOML with [encoder], [train] and [corpus] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mask plan JSON; all blocks global when omitted.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// SEQ1 corpus; generated from the config when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Args)]
pub struct Extract {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// SEQ1 corpus.
    #[arg(long)]
    pub input: PathBuf,
    /// Process at most this many sequences.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct Gradcheck {
    /// Check in 64-bit instead of 32-bit precision.
    #[arg(long)]
    pub f64: bool,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct Bench {
    #[arg(long, default_value_t = 2048)]
    pub length: usize,
    #[arg(long, default_value_t = 30)]
    pub radius: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 256)]
    pub d_model: usize,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenSynth(a) => commands::gen_synth(&a),
        Command::Classify(a) => commands::classify(&a),
        Command::Plan(a) => commands::plan(&a),
        Command::Render(a) => commands::render(&a),
        Command::TrainToy(a) => commands::train_toy(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let kind = match e.downcast_ref::<attnscope::Error>() {
                Some(attnscope::Error::Format(_)) => "format",
                Some(attnscope::Error::Io { .. }) => "io",
                Some(attnscope::Error::Config(_)) => "config",
                Some(_) => "validation",
                None => "error",
            };
            eprintln!("error[{kind}]: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Expands directories to their `.atn` files, sorted by name.
pub(crate) fn collect_atn(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "atn"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!(attnscope::Error::Validation("no ATN1 inputs found".into()));
    }
    Ok(out)
}
