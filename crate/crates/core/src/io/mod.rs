//! File formats: ATN1 attention dumps, PGM heatmaps, JSON reports, model
//! checkpoints, corpus files, loss curves and TOML configs.

mod atn;
mod binary;
mod checkpoint;
mod config;
mod corpus;
mod curves;
mod pgm;
mod report;

pub use atn::{decode_atn, encode_atn, read_atn, write_atn, AtnDump, AtnHeader, AtnWarning, ATN_MAGIC, ATN_VERSION};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CKPT_MAGIC, CKPT_VERSION};
pub use config::{load_thresholds, load_toy_config, thresholds_from_env, ToyConfig, THRESHOLDS_ENV};
pub use corpus::{decode_corpus, encode_corpus, read_corpus, write_corpus, SEQ_MAGIC, SEQ_VERSION};
pub use curves::{curve_csv, write_curve};
pub use pgm::{encode_pgm, pixel_value, render_heatmap};
pub use report::{classify_corpus, Report, CorpusInfo, REPORT_VERSION};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
