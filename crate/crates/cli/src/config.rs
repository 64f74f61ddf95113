use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use reidc::io::{normalize_dataset, ExpectedStats};
use reidc::metrics::DistanceMetric;
use reidc::protocol::{default_repeats, CrossModality, CrossMode, EvalConfig, EvalSetting};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{GlobalArgs, Usage};

/// Contents of a `--config` TOML file. Command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub repeats: Option<u32>,
    pub setting: Option<String>,
    pub mode: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub cmc_depth: Option<usize>,
    pub metric: Option<DistanceMetric>,
    pub gallery_draws: Option<u32>,
    pub corrupt_all_rgb: Option<bool>,
    pub skip_stats: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| Usage(format!("config {}: {e}", path.display())).into())
    }
}

/// Global options after merging flags, the config file and defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    /// `None` means the dataset preset.
    pub repeats: Option<u32>,
    pub setting: EvalSetting,
    pub mode: Option<CrossMode>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub cmc_depth: usize,
    pub metric: DistanceMetric,
    pub gallery_draws: u32,
    pub corrupt_all_rgb: bool,
    pub skip_stats: bool,
    pub config_file: Option<PathBuf>,
}

fn usage<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| Usage(e.to_string()).into())
}

impl Settings {
    pub fn resolve(g: &GlobalArgs) -> Result<Self> {
        let file = match &g.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let defaults = EvalConfig::default();
        let setting = match (g.setting, &file.setting) {
            (Some(s), _) => s,
            (None, Some(s)) => usage(s.parse())?,
            (None, None) => defaults.setting,
        };
        let mode = match (g.mode, &file.mode) {
            (Some(m), _) => Some(m),
            (None, Some(m)) => Some(usage(m.parse())?),
            (None, None) => None,
        };
        let s = Settings {
            seed: g.seed.or(file.seed).unwrap_or(defaults.master_seed),
            repeats: g.repeats.or(file.repeats),
            setting,
            mode,
            workers: g.workers.or(file.workers),
            out: g.out.clone().or(file.out),
            cmc_depth: file.cmc_depth.unwrap_or(defaults.cmc_depth),
            metric: file.metric.unwrap_or(defaults.metric),
            gallery_draws: file.gallery_draws.unwrap_or(defaults.gallery_draws),
            corrupt_all_rgb: file.corrupt_all_rgb.unwrap_or(false),
            skip_stats: g.skip_stats || file.skip_stats.unwrap_or(false),
            config_file: g.config.clone(),
        };
        if s.repeats == Some(0) {
            return Err(Usage("--repeats must be at least 1".into()).into());
        }
        if s.workers == Some(0) {
            return Err(Usage("--workers must be at least 1".into()).into());
        }
        Ok(s)
    }

    pub fn eval_config(&self, dataset: &str) -> Result<EvalConfig> {
        let cross = match (
            CrossModality::for_dataset(dataset, self.mode.unwrap_or(CrossMode::A)),
            self.mode,
        ) {
            (Some(mut c), _) => {
                c.corrupt_all_rgb = self.corrupt_all_rgb;
                Some(c)
            }
            (None, Some(_)) => {
                return Err(Usage(format!("--mode applies to sysu-mm01 and regdb, not `{dataset}`")).into());
            }
            (None, None) => None,
        };
        let cfg = EvalConfig {
            setting: self.setting,
            repeats: self.repeats.unwrap_or_else(|| default_repeats(dataset)),
            master_seed: self.seed,
            cross,
            cmc_depth: self.cmc_depth,
            metric: self.metric,
            gallery_draws: self.gallery_draws,
        };
        usage(cfg.validate())?;
        Ok(cfg)
    }

    /// Published split sizes to enforce for `dataset`, if any.
    pub fn expected_stats(&self, dataset: &str) -> Option<ExpectedStats> {
        if self.skip_stats {
            None
        } else {
            ExpectedStats::preset(&normalize_dataset(dataset))
        }
    }

    /// Everything that determined a run, recorded in its report.
    pub fn resolved(&self, command: &str, cfg: &EvalConfig, dataset: &str, extra: Value) -> Value {
        let mut v = json!({
            "command": command,
            "dataset": dataset,
            "seed": cfg.master_seed,
            "repeats": cfg.repeats,
            "setting": cfg.setting.name(),
            "mode": cfg.cross.map(|c| c.mode_name()),
            "corrupt_all_rgb": cfg.cross.map(|c| c.corrupt_all_rgb),
            "cmc_depth": cfg.cmc_depth,
            "metric": cfg.metric,
            "gallery_draws": cfg.gallery_draws,
            "workers": self.workers,
            "config_file": self.config_file,
            "skip_stats": self.skip_stats,
        });
        if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
            base.extend(more);
        }
        v
    }
}
