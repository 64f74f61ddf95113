use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corruption::apply_corruption;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{write_atomic, DatasetManifest};

use super::eval::Roles;
use super::plan::{cell_plan, CorruptionPlan, SweepCell};
use super::{plan_targets, EvalConfig, EvalSetting, Side};

/// Present in an output directory until every file was written.
pub const INCOMPLETE_MARKER: &str = ".incomplete";
pub const PLAN_FILE: &str = "plan.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFailure {
    pub image_id: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterializeSummary {
    pub dir: PathBuf,
    pub written: usize,
    pub corrupted: usize,
    pub failures: Vec<FileFailure>,
}

impl MaterializeSummary {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Writes `<out_dir>/<image_id>.png` for every id, corrupted when the plan
/// has an entry for it and copied otherwise, plus `plan.json`.
///
/// Unreadable sources are collected as failures; the directory then keeps
/// its [`INCOMPLETE_MARKER`].
pub fn materialize(
    plan: &CorruptionPlan,
    manifest: &DatasetManifest,
    ids: &[u64],
    out_dir: &Path,
) -> Result<MaterializeSummary> {
    let known: HashSet<u64> = manifest.records.iter().map(|r| r.image_id).collect();
    if let Some(id) = ids
        .iter()
        .chain(plan.entries.iter().map(|e| &e.image_id))
        .find(|id| !known.contains(id))
    {
        return Err(Error::UnknownImageId(*id));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let marker = out_dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, b"").map_err(|e| Error::io(&marker, e))?;

    let specs = plan.lookup();
    let outcomes: Vec<std::result::Result<bool, FileFailure>> = ids
        .par_iter()
        .map(|&id| {
            let record = manifest.get(id).expect("id checked above");
            let fail = |e: Error| FileFailure {
                image_id: id,
                message: e.to_string(),
            };
            let img = Image::load(manifest.resolve(record)).map_err(fail)?;
            let (out, corrupted) = match specs.get(&id) {
                Some(spec) if spec.severity > 0 => (apply_corruption(&img, spec).map_err(fail)?, true),
                _ => (img, false),
            };
            write_atomic(&out_dir.join(format!("{id}.png")), &out.encode_png()).map_err(fail)?;
            Ok(corrupted)
        })
        .collect();

    let mut summary = MaterializeSummary {
        dir: out_dir.to_path_buf(),
        written: 0,
        corrupted: 0,
        failures: Vec::new(),
    };
    for o in outcomes {
        match o {
            Ok(c) => {
                summary.written += 1;
                summary.corrupted += c as usize;
            }
            Err(f) => summary.failures.push(f),
        }
    }
    write_atomic(&out_dir.join(PLAN_FILE), plan.to_json().as_bytes())?;
    if summary.is_complete() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    Ok(summary)
}

fn side_ids(roles: &Roles<'_>, sides: &[Side]) -> Vec<u64> {
    let mut ids: Vec<u64> = sides
        .iter()
        .flat_map(|&s| roles.records(s).iter().map(|r| r.image_id))
        .collect();
    ids.sort_unstable();
    ids
}

/// Materializes one repeat of a setting into `<out_root>/<setting>/<repeat>/`
/// (`<out_root>/clean/` for the clean setting). Every image of each
/// corrupted side is written so embedders can process the directory as is.
pub fn materialize_setting(
    manifest: &DatasetManifest,
    config: &EvalConfig,
    repeat: u32,
    out_root: &Path,
) -> Result<MaterializeSummary> {
    let roles = Roles::new(manifest, config.cross.as_ref());
    let setting = config.setting;
    if setting == EvalSetting::Clean {
        let plan = CorruptionPlan {
            master_seed: config.master_seed,
            repeat_index: repeat,
            entries: Vec::new(),
        };
        let ids = side_ids(&roles, &[Side::Query, Side::Gallery]);
        return materialize(&plan, manifest, &ids, &out_root.join("clean"));
    }
    let sides: Vec<Side> = [Side::Query, Side::Gallery]
        .into_iter()
        .filter(|&s| setting.corrupts(s))
        .collect();
    let targets = plan_targets(manifest, setting, config.cross.as_ref());
    let plan = cell_plan(&targets, SweepCell::RANDOM, config.master_seed, repeat);
    let dir = out_root.join(setting.name()).join(repeat.to_string());
    materialize(&plan, manifest, &side_ids(&roles, &sides), &dir)
}

/// Materializes one repeat of a sweep cell into
/// `<out_root>/sweep/<cell>/<repeat>/`.
pub fn materialize_cell(
    manifest: &DatasetManifest,
    config: &EvalConfig,
    cell: SweepCell,
    repeat: u32,
    out_root: &Path,
) -> Result<MaterializeSummary> {
    cell.validate()?;
    let roles = Roles::new(manifest, config.cross.as_ref());
    let targets = plan_targets(manifest, EvalSetting::Both, config.cross.as_ref());
    let plan = cell_plan(&targets, cell, config.master_seed, repeat);
    let dir = out_root.join("sweep").join(cell.label()).join(repeat.to_string());
    materialize(&plan, manifest, &side_ids(&roles, &[Side::Query, Side::Gallery]), &dir)
}
