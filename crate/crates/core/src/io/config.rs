use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::ClassifierThresholds;
use crate::toymodel::{CorpusConfig, EncoderConfig, TrainConfig};

/// Environment variable naming a thresholds TOML file.
pub const THRESHOLDS_ENV: &str = "ATTNSCOPE_THRESHOLDS";

/// Training run description. Every section and key is optional.
///
/// ```toml
/// [encoder]
/// n_blocks = 4
/// d_model = 32
///
/// [train]
/// steps = 500
/// learning_rate = 0.02
///
/// [corpus]
/// sequences = 256
/// length = 64
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub corpus: CorpusConfig,
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.train.validate()?;
        if self.corpus.width != self.encoder.d_model {
            return Err(Error::Config(format!(
                "corpus width {} differs from d_model {}",
                self.corpus.width, self.encoder.d_model
            )));
        }
        if self.corpus.length > self.encoder.max_len {
            return Err(Error::Config(format!(
                "corpus length {} exceeds max_len {}",
                self.corpus.length, self.encoder.max_len
            )));
        }
        Ok(())
    }
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn load_toy_config(path: impl AsRef<Path>) -> Result<ToyConfig> {
    let cfg: ToyConfig = parse_toml(path.as_ref())?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_thresholds(path: impl AsRef<Path>) -> Result<ClassifierThresholds> {
    let th: ClassifierThresholds = parse_toml(path.as_ref())?;
    th.validate()?;
    Ok(th)
}

/// Thresholds from the file named by `ATTNSCOPE_THRESHOLDS`, or defaults
/// when it is unset.
pub fn thresholds_from_env() -> Result<ClassifierThresholds> {
    match std::env::var_os(THRESHOLDS_ENV) {
        Some(p) if !p.is_empty() => load_thresholds(Path::new(&p)),
        _ => Ok(ClassifierThresholds::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toy_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("toy.toml");
        std::fs::write(&p, "[train]\nsteps = 10\n[encoder]\nn_blocks = 2\nmasks = [{ kind = \"global\" }, { kind = \"band\", radius = 5 }]\n").unwrap();
        let cfg = load_toy_config(&p).unwrap();
        assert_eq!(cfg.train.steps, 10);
        assert_eq!(cfg.train.learning_rate, TrainConfig::default().learning_rate);
        assert_eq!(cfg.encoder.n_blocks, 2);
        assert_eq!(cfg.encoder.masks[1], crate::attention::MaskKind::Band(5));
        assert_eq!(cfg.corpus, CorpusConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("th.toml");
        std::fs::write(&p, "kappa = 8.0\nthetaV = 0.2\n").unwrap();
        assert!(matches!(load_thresholds(&p), Err(Error::Config(_))));
        std::fs::write(&p, "kappa = 8.0\nband_width = 3\n").unwrap();
        let th = load_thresholds(&p).unwrap();
        assert_eq!(th.kappa, 8.0);
        assert_eq!(th.band_width, Some(3));
        std::fs::write(&p, "theta_d = 0.1\n").unwrap();
        assert!(load_thresholds(&p).is_err());
    }
}
