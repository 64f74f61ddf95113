//! Evaluation protocol: corruption plans, corruption settings, repeated
//! evaluation with mean/std aggregation, fixed-corruption sweeps and
//! cross-modality roles.

mod eval;
mod materialize;
mod plan;
mod provider;
mod report;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{normalize_dataset, DatasetManifest, ManifestRecord, Modality, Split};
use crate::metrics::{DistanceMetric, MaskRule};

pub use eval::{gallery_draw, run_eval, run_sweep, Roles};
pub use materialize::{
    materialize, materialize_cell, materialize_setting, FileFailure, MaterializeSummary, INCOMPLETE_MARKER, PLAN_FILE,
};
pub use plan::{cell_plan, sample_plan, CorruptionPlan, PlanEntry, SweepCell};
pub use provider::{EmbedRequest, EmbeddingProvider, FileEmbeddings};
pub use report::{Aggregate, EvalReport, RepeatInfo, ReportRow};
pub use synthetic::{synthetic_embed, synthetic_manifest, SyntheticParams, SyntheticProvider};

pub const DEFAULT_REPEATS: u32 = 10;
/// Repeat count for MSMT17, whose test set is much larger.
pub const MSMT17_REPEATS: u32 = 3;
/// Number of distinct SYSU-MM01 gallery draws.
pub const SYSU_GALLERY_DRAWS: u32 = 10;
pub const DEFAULT_CMC_DEPTH: usize = 20;

pub fn default_repeats(dataset: &str) -> u32 {
    if normalize_dataset(dataset) == "msmt17" {
        MSMT17_REPEATS
    } else {
        DEFAULT_REPEATS
    }
}

/// Which side of the retrieval pair is corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSetting {
    Clean,
    Query,
    Gallery,
    Both,
}

impl EvalSetting {
    pub const ALL: [EvalSetting; 4] = [
        EvalSetting::Clean,
        EvalSetting::Query,
        EvalSetting::Gallery,
        EvalSetting::Both,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalSetting::Clean => "clean",
            EvalSetting::Query => "query",
            EvalSetting::Gallery => "gallery",
            EvalSetting::Both => "both",
        }
    }

    pub fn corrupts(self, side: Side) -> bool {
        matches!(
            (self, side),
            (EvalSetting::Both, _) | (EvalSetting::Query, Side::Query) | (EvalSetting::Gallery, Side::Gallery)
        )
    }
}

impl fmt::Display for EvalSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_prefix("corrupted-").unwrap_or(&s);
        match s {
            "clean" => Ok(EvalSetting::Clean),
            "query" => Ok(EvalSetting::Query),
            "gallery" => Ok(EvalSetting::Gallery),
            "both" => Ok(EvalSetting::Both),
            _ => Err(Error::InvalidParameter(format!("unknown setting `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Query,
    Gallery,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Query => "query",
            Side::Gallery => "gallery",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossDataset {
    SysuMm01,
    Regdb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrossMode {
    A,
    B,
}

impl FromStr for CrossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(CrossMode::A),
            "B" | "b" => Ok(CrossMode::B),
            other => Err(Error::InvalidParameter(format!(
                "unknown cross-modality mode `{other}`"
            ))),
        }
    }
}

/// Cross-modality evaluation mode.
///
/// SYSU-MM01: A is all-search, B is indoor-search; infrared queries against
/// a visible gallery. RegDB: A is visible-to-thermal, B thermal-to-visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossModality {
    pub dataset: CrossDataset,
    pub mode: CrossMode,
    /// Corrupt visible images on both sides instead of the gallery only.
    #[serde(default)]
    pub corrupt_all_rgb: bool,
}

impl CrossModality {
    pub fn new(dataset: CrossDataset, mode: CrossMode) -> Self {
        CrossModality {
            dataset,
            mode,
            corrupt_all_rgb: false,
        }
    }

    /// Picks the cross-modality dataset from a manifest dataset name.
    pub fn for_dataset(name: &str, mode: CrossMode) -> Option<Self> {
        match normalize_dataset(name).as_str() {
            "sysumm01" => Some(Self::new(CrossDataset::SysuMm01, mode)),
            "regdb" => Some(Self::new(CrossDataset::Regdb, mode)),
            _ => None,
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match (self.dataset, self.mode) {
            (CrossDataset::SysuMm01, CrossMode::A) => "all-search",
            (CrossDataset::SysuMm01, CrossMode::B) => "indoor-search",
            (CrossDataset::Regdb, CrossMode::A) => "visible-to-thermal",
            (CrossDataset::Regdb, CrossMode::B) => "thermal-to-visible",
        }
    }

    pub fn mask_rule(&self) -> MaskRule {
        match self.dataset {
            CrossDataset::SysuMm01 => MaskRule::Sysu,
            CrossDataset::Regdb => MaskRule::NoCamera,
        }
    }

    fn side_of(&self, r: &ManifestRecord) -> Option<Side> {
        if r.split == Split::Train {
            return None;
        }
        match (self.dataset, self.mode, r.modality) {
            (CrossDataset::SysuMm01, _, Modality::Ir) => Some(Side::Query),
            (CrossDataset::SysuMm01, CrossMode::A, Modality::Rgb) => Some(Side::Gallery),
            (CrossDataset::SysuMm01, CrossMode::B, Modality::Rgb) => {
                matches!(r.camera_id, 1 | 2).then_some(Side::Gallery)
            }
            (CrossDataset::Regdb, CrossMode::A, Modality::Rgb) => Some(Side::Query),
            (CrossDataset::Regdb, CrossMode::A, Modality::Ir) => Some(Side::Gallery),
            (CrossDataset::Regdb, CrossMode::B, Modality::Ir) => Some(Side::Query),
            (CrossDataset::Regdb, CrossMode::B, Modality::Rgb) => Some(Side::Gallery),
        }
    }

    fn may_corrupt(&self, r: &ManifestRecord, side: Side) -> bool {
        r.modality == Modality::Rgb && (self.corrupt_all_rgb || side == Side::Gallery)
    }
}

/// Everything that determines an evaluation besides the embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub setting: EvalSetting,
    pub repeats: u32,
    pub master_seed: u64,
    #[serde(default)]
    pub cross: Option<CrossModality>,
    pub cmc_depth: usize,
    pub metric: DistanceMetric,
    /// Distinct gallery draws cycled over repeats (SYSU-MM01 only).
    pub gallery_draws: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            setting: EvalSetting::Both,
            repeats: DEFAULT_REPEATS,
            master_seed: 0,
            cross: None,
            cmc_depth: DEFAULT_CMC_DEPTH,
            metric: DistanceMetric::default(),
            gallery_draws: SYSU_GALLERY_DRAWS,
        }
    }
}

impl EvalConfig {
    /// Defaults with the repeat preset of the dataset.
    pub fn for_dataset(dataset: &str) -> Self {
        EvalConfig {
            repeats: default_repeats(dataset),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be at least 1".into()));
        }
        if self.cmc_depth == 0 {
            return Err(Error::InvalidParameter("cmc depth must be at least 1".into()));
        }
        if self.gallery_draws == 0 {
            return Err(Error::InvalidParameter("gallery draws must be at least 1".into()));
        }
        Ok(())
    }

    pub fn mask_rule(&self) -> MaskRule {
        self.cross.map_or(MaskRule::Standard, |c| c.mask_rule())
    }
}

/// Ids of the images the setting corrupts, in manifest order.
pub fn plan_targets(manifest: &DatasetManifest, setting: EvalSetting, cross: Option<&CrossModality>) -> Vec<u64> {
    let roles = Roles::new(manifest, cross);
    let mut out = Vec::new();
    for r in &manifest.records {
        let Some(side) = roles.side_of(r) else { continue };
        if !setting.corrupts(side) {
            continue;
        }
        if cross.is_some_and(|c| !c.may_corrupt(r, side)) {
            continue;
        }
        out.push(r.image_id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting_sides() {
        assert!(EvalSetting::Query.corrupts(Side::Query) && !EvalSetting::Query.corrupts(Side::Gallery));
        assert!(EvalSetting::Gallery.corrupts(Side::Gallery) && !EvalSetting::Gallery.corrupts(Side::Query));
        assert!(EvalSetting::Both.corrupts(Side::Query) && EvalSetting::Both.corrupts(Side::Gallery));
        assert!(!EvalSetting::Clean.corrupts(Side::Query) && !EvalSetting::Clean.corrupts(Side::Gallery));
        assert_eq!(
            "corrupted-gallery".parse::<EvalSetting>().unwrap(),
            EvalSetting::Gallery
        );
    }

    #[test]
    fn repeat_presets() {
        assert_eq!(default_repeats("market1501"), 10);
        assert_eq!(default_repeats("MSMT17"), 3);
        assert_eq!(EvalConfig::for_dataset("msmt17").repeats, 3);
    }

    #[test]
    fn mode_names() {
        let m = |d, m| CrossModality::new(d, m).mode_name();
        assert_eq!(m(CrossDataset::SysuMm01, CrossMode::A), "all-search");
        assert_eq!(m(CrossDataset::SysuMm01, CrossMode::B), "indoor-search");
        assert_eq!(m(CrossDataset::Regdb, CrossMode::A), "visible-to-thermal");
        assert_eq!(m(CrossDataset::Regdb, CrossMode::B), "thermal-to-visible");
    }
}
