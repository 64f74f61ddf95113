use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corruption::{cell_at, CorruptionSpec, CorruptionType, CELL_COUNT};
use crate::error::{Error, Result};
use crate::rng::{derive_image_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanEntry {
    pub image_id: u64,
    #[serde(rename = "type")]
    pub ctype: CorruptionType,
    pub severity: u8,
    pub seed: u64,
}

impl PlanEntry {
    pub fn spec(&self) -> CorruptionSpec {
        CorruptionSpec {
            ctype: self.ctype,
            severity: self.severity,
            seed: self.seed,
        }
    }
}

/// Per-image corruption assignment for one repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionPlan {
    pub master_seed: u64,
    pub repeat_index: u32,
    pub entries: Vec<PlanEntry>,
}

impl CorruptionPlan {
    pub fn lookup(&self) -> HashMap<u64, CorruptionSpec> {
        self.entries.iter().map(|e| (e.image_id, e.spec())).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: CorruptionPlan = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "corruption plan".into(),
            source,
        })?;
        if let Some(e) = plan.entries.iter().find(|e| e.severity > 5) {
            return Err(Error::InvalidSeverity(e.severity));
        }
        Ok(plan)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Draws one of the 100 `(type, severity)` cells per image.
///
/// Image `id` uses a stream keyed by `derive_image_seed(master, repeat, id)`:
/// the first draw is `below(100)` (cell index, type-major), the next
/// `u64` becomes the corruption seed.
pub fn sample_plan(ids: &[u64], master_seed: u64, repeat_index: u32) -> CorruptionPlan {
    cell_plan(ids, SweepCell::RANDOM, master_seed, repeat_index)
}

/// A sweep cell; a missing component is drawn per image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SweepCell {
    #[serde(rename = "type")]
    pub ctype: Option<CorruptionType>,
    pub severity: Option<u8>,
}

impl SweepCell {
    pub const RANDOM: SweepCell = SweepCell {
        ctype: None,
        severity: None,
    };

    pub fn fixed(ctype: CorruptionType, severity: u8) -> Self {
        SweepCell {
            ctype: Some(ctype),
            severity: Some(severity),
        }
    }

    /// Every image at `severity`, type drawn per image.
    pub fn level(severity: u8) -> Self {
        SweepCell {
            ctype: None,
            severity: Some(severity),
        }
    }

    /// Every image of type `ctype`, severity drawn per image from 1..=5.
    pub fn of_type(ctype: CorruptionType) -> Self {
        SweepCell {
            ctype: Some(ctype),
            severity: None,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.severity == Some(0)
    }

    pub fn validate(&self) -> Result<()> {
        match self.severity {
            Some(s) if s > 5 => Err(Error::InvalidSeverity(s)),
            _ => Ok(()),
        }
    }

    /// Directory-safe label, e.g. `fog-s3`, `level-2`, `gaussian-noise`.
    pub fn label(&self) -> String {
        match (self.ctype, self.severity) {
            (Some(t), Some(s)) => format!("{}-s{s}", t.name()),
            (None, Some(s)) => format!("level-{s}"),
            (Some(t), None) => t.name().to_string(),
            (None, None) => "random".to_string(),
        }
    }
}

impl fmt::Display for SweepCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses the forms produced by [`SweepCell::label`].
impl FromStr for SweepCell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let severity = |v: &str| -> Result<u8> {
            let sev: u8 = v
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad severity in sweep cell {s:?}")))?;
            if sev > 5 {
                return Err(Error::InvalidSeverity(sev));
            }
            Ok(sev)
        };
        if s == "random" {
            return Ok(SweepCell::RANDOM);
        }
        if let Some(v) = s.strip_prefix("level-") {
            return Ok(SweepCell::level(severity(v)?));
        }
        if let Some((t, v)) = s.rsplit_once("-s") {
            if v.len() == 1 && v.bytes().all(|b| b.is_ascii_digit()) {
                return Ok(SweepCell::fixed(t.parse()?, severity(v)?));
            }
        }
        Ok(SweepCell::of_type(s.parse()?))
    }
}

/// Plan in which every image is drawn from `cell`.
pub fn cell_plan(ids: &[u64], cell: SweepCell, master_seed: u64, repeat_index: u32) -> CorruptionPlan {
    let entries = ids
        .iter()
        .map(|&image_id| {
            let mut rng = Stream::new(derive_image_seed(master_seed, repeat_index, image_id));
            let (ctype, severity) = match (cell.ctype, cell.severity) {
                (None, None) => cell_at(rng.below(CELL_COUNT as u64) as usize),
                (Some(t), None) => (t, 1 + rng.below(5) as u8),
                (None, Some(s)) => (CorruptionType::ALL[rng.below(20) as usize], s),
                (Some(t), Some(s)) => (t, s),
            };
            PlanEntry {
                image_id,
                ctype,
                severity,
                seed: rng.next_u64(),
            }
        })
        .collect();
    CorruptionPlan {
        master_seed,
        repeat_index,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_labels_round_trip() {
        let cells = [
            SweepCell::RANDOM,
            SweepCell::level(0),
            SweepCell::level(4),
            SweepCell::of_type(CorruptionType::GaussianNoise),
            SweepCell::fixed(CorruptionType::Snow, 2),
            SweepCell::fixed(CorruptionType::GaussianBlur, 5),
        ];
        for c in cells {
            assert_eq!(c.label().parse::<SweepCell>().unwrap(), c);
        }
        assert!("fog-s9".parse::<SweepCell>().is_err());
        assert!("level-x".parse::<SweepCell>().is_err());
        assert!("mist".parse::<SweepCell>().is_err());
    }

    #[test]
    fn deterministic_and_order_independent() {
        let a = sample_plan(&[5, 9, 11], 3, 1);
        assert_eq!(a, sample_plan(&[5, 9, 11], 3, 1));
        let b = sample_plan(&[11, 5], 3, 1);
        assert_eq!(b.entries[0], a.entries[2]);
        assert_eq!(b.entries[1], a.entries[0]);
        assert_ne!(a, sample_plan(&[5, 9, 11], 3, 2));
    }

    #[test]
    fn fixed_cells() {
        let p = cell_plan(&[1, 2, 3], SweepCell::fixed(CorruptionType::Fog, 2), 0, 0);
        assert!(p
            .entries
            .iter()
            .all(|e| e.ctype == CorruptionType::Fog && e.severity == 2));
        let p = cell_plan(&(0..200).collect::<Vec<_>>(), SweepCell::level(4), 0, 0);
        assert!(p.entries.iter().all(|e| e.severity == 4));
        assert!(p.entries.iter().any(|e| e.ctype != p.entries[0].ctype));
    }

    #[test]
    fn json_round_trip() {
        let p = sample_plan(&[0, 1, 2], 7, 0);
        let text = p.to_json();
        let back = CorruptionPlan::from_json(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json(), text);
    }
}
