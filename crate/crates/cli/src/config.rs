use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

/// Optional TOML defaults for `gridbdd run`. Relative paths resolve against
/// the config file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    #[serde(default)]
    pub features: Vec<PathBuf>,
    pub levels: Option<PathBuf>,
    pub seed: Option<u64>,
    pub max_cycles: Option<u64>,
    pub report: Option<PathBuf>,
    pub format: Option<String>,
    pub fixed_clock: Option<bool>,
    pub jobs: Option<usize>,
    pub connect: Option<String>,
    pub omniscient_oracles: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.features.iter_mut().chain(&mut cfg.levels).chain(&mut cfg.report) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kebab_keys() {
        let cfg: FileConfig =
            toml::from_str("seed = 7\nmax-cycles = 50\nfixed-clock = true\nfeatures = [\"a.feature\"]").unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.max_cycles, Some(50));
        assert_eq!(cfg.fixed_clock, Some(true));
        assert_eq!(cfg.features, [PathBuf::from("a.feature")]);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("sed = 7").is_err());
    }
}
