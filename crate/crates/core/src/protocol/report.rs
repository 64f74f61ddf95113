use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_atomic, Tap};
use crate::metrics::MetricSummary;

use super::plan::SweepCell;
use super::{EvalConfig, EvalSetting};

/// Mean and population standard deviation over repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub raw: Vec<f64>,
}

impl Aggregate {
    pub fn new(raw: Vec<f64>) -> Self {
        if raw.is_empty() {
            return Aggregate {
                mean: 0.0,
                std: 0.0,
                raw,
            };
        }
        let n = raw.len() as f64;
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            return Aggregate {
                mean: lo,
                std: 0.0,
                raw,
            };
        }
        let mean = (raw.iter().sum::<f64>() / n).clamp(lo, hi);
        let var = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Aggregate {
            mean,
            std: var.sqrt(),
            raw,
        }
    }

    /// `mean (std)` in percent with two decimals.
    pub fn percent(&self) -> String {
        format!("{:.2} ({:.2})", 100.0 * self.mean, 100.0 * self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub tap: Tap,
    pub setting: EvalSetting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<SweepCell>,
    pub map: Aggregate,
    pub minp: Aggregate,
    pub rank1: Aggregate,
    pub rank5: Aggregate,
    pub rank10: Aggregate,
    pub evaluated: Vec<usize>,
    pub skipped: Vec<usize>,
}

impl ReportRow {
    pub(crate) fn from_summaries(
        label: String,
        tap: Tap,
        setting: EvalSetting,
        cell: Option<SweepCell>,
        summaries: &[MetricSummary],
    ) -> Self {
        let agg = |f: &dyn Fn(&MetricSummary) -> f64| Aggregate::new(summaries.iter().map(f).collect());
        ReportRow {
            label,
            tap,
            setting,
            cell,
            map: agg(&|s| s.map),
            minp: agg(&|s| s.minp),
            rank1: agg(&|s| s.rank(1)),
            rank5: agg(&|s| s.rank(5)),
            rank10: agg(&|s| s.rank(10)),
            evaluated: summaries.iter().map(|s| s.evaluated).collect(),
            skipped: summaries.iter().map(|s| s.skipped).collect(),
        }
    }

    fn name(&self) -> String {
        match &self.cell {
            Some(c) => c.label(),
            None => self.setting.name().to_string(),
        }
    }
}

/// Seeds and sizes of one repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeatInfo {
    pub repeat: u32,
    pub plan_entries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery_draw: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery_draw_seed: Option<u64>,
    pub query_size: usize,
    pub gallery_size: usize,
}

pub const SEED_DERIVATION: &str = "splitmix64(master_seed ^ (repeat << 32) ^ image_id)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub toolkit_version: String,
    pub dataset: String,
    pub config: EvalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub seed_derivation: String,
    pub repeat_info: Vec<RepeatInfo>,
    pub rows: Vec<ReportRow>,
    /// Caller-supplied configuration, recorded verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_config: Option<serde_json::Value>,
}

impl EvalReport {
    pub(crate) fn new(dataset: &str, config: &EvalConfig, repeat_info: Vec<RepeatInfo>, rows: Vec<ReportRow>) -> Self {
        EvalReport {
            toolkit_version: crate::VERSION.to_string(),
            dataset: dataset.to_string(),
            config: config.clone(),
            mode: config.cross.map(|c| c.mode_name().to_string()),
            seed_derivation: SEED_DERIVATION.to_string(),
            repeat_info,
            rows,
            resolved_config: None,
        }
    }

    /// Appends the rows of a report produced under the same configuration.
    pub fn merge(&mut self, other: EvalReport) -> Result<()> {
        if other.config != self.config || other.dataset != self.dataset {
            return Err(Error::InvalidParameter(
                "cannot merge reports with different configurations".into(),
            ));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "evaluation report".into(),
            source,
        })
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())
    }

    /// One line per row; metric values are fractions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,tap,setting,cell,repeats,map,map_std,minp,minp_std,rank1,rank1_std,rank5,rank5_std,rank10,rank10_std,skipped\n",
        );
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                r.label,
                r.tap.name(),
                r.setting.name(),
                r.cell.map(|c| c.label()).unwrap_or_default(),
                r.map.raw.len()
            );
            for a in [&r.map, &r.minp, &r.rank1, &r.rank5, &r.rank10] {
                let _ = write!(out, ",{},{}", a.mean, a.std);
            }
            let _ = writeln!(out, ",{}", r.skipped.iter().sum::<usize>());
        }
        out
    }

    /// Plain-text table: one row per entry with `mINP`, `mAP` and `Rank-1`
    /// as `mean (std)` percentages.
    pub fn to_table(&self) -> String {
        let multi = self.rows.iter().any(|r| r.label != self.rows[0].label);
        let first = if self.rows.iter().any(|r| r.cell.is_some()) {
            "Corruption"
        } else {
            "Setting"
        };
        let names: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                if multi {
                    format!("{} [{}]", r.name(), r.label)
                } else {
                    r.name()
                }
            })
            .collect();
        let w = names.iter().map(String::len).chain([first.len()]).max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w$} | {:>14} | {:>14} | {:>14}", first, "mINP", "mAP", "Rank-1");
        let _ = writeln!(out, "{}", "-".repeat(w + 54));
        for (name, r) in names.iter().zip(&self.rows) {
            let _ = writeln!(
                out,
                "{:<w$} | {:>14} | {:>14} | {:>14}",
                name,
                r.minp.percent(),
                r.map.percent(),
                r.rank1.percent()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_std() {
        let a = Aggregate::new(vec![1.0, 3.0]);
        assert_eq!((a.mean, a.std), (2.0, 1.0));
        let same = Aggregate::new(vec![0.1, 0.1, 0.1]);
        assert_eq!((same.mean, same.std), (0.1, 0.0));
        assert_eq!(Aggregate::new(vec![0.5705, 0.5705]).percent(), "57.05 (0.00)");
    }
}
