use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{DatasetManifest, ManifestRecord, Split};
use crate::metrics::{evaluate, pairwise_distances, EmbeddingMatrix, ImageMeta, MetricSummary};
use crate::rng::{child_seed, Stream};

use super::plan::{cell_plan, sample_plan, CorruptionPlan, SweepCell};
use super::provider::{EmbedRequest, EmbeddingProvider};
use super::report::{EvalReport, RepeatInfo, ReportRow};
use super::{plan_targets, CrossDataset, CrossModality, EvalConfig, EvalSetting, Side};

const GALLERY_DRAW_TAG: u64 = 0x5359_5355_4741_4c00;

/// Query and gallery pools of a manifest under an optional cross-modality
/// mode, each in manifest order.
#[derive(Debug, Clone)]
pub struct Roles<'a> {
    pub query: Vec<&'a ManifestRecord>,
    pub gallery: Vec<&'a ManifestRecord>,
    cross: Option<CrossModality>,
}

impl<'a> Roles<'a> {
    pub fn new(manifest: &'a DatasetManifest, cross: Option<&CrossModality>) -> Self {
        let mut roles = Roles {
            query: Vec::new(),
            gallery: Vec::new(),
            cross: cross.copied(),
        };
        for r in &manifest.records {
            match roles.side_of(r) {
                Some(Side::Query) => roles.query.push(r),
                Some(Side::Gallery) => roles.gallery.push(r),
                None => {}
            }
        }
        roles
    }

    pub fn side_of(&self, r: &ManifestRecord) -> Option<Side> {
        match &self.cross {
            Some(c) => c.side_of(r),
            None => match r.split {
                Split::Query => Some(Side::Query),
                Split::Gallery => Some(Side::Gallery),
                Split::Train => None,
            },
        }
    }

    pub fn records(&self, side: Side) -> &[&'a ManifestRecord] {
        match side {
            Side::Query => &self.query,
            Side::Gallery => &self.gallery,
        }
    }
}

/// Single-shot gallery: one image per (person, camera), chosen uniformly.
/// Returns indices into `gallery`, ascending.
pub fn gallery_draw(gallery: &[&ManifestRecord], seed: u64) -> Vec<usize> {
    let mut groups: BTreeMap<(u64, u32), Vec<usize>> = BTreeMap::new();
    for (i, r) in gallery.iter().enumerate() {
        groups.entry((r.person_id, r.camera_id)).or_default().push(i);
    }
    let mut rng = Stream::new(seed);
    let mut picked: Vec<usize> = groups
        .values()
        .map(|members| members[rng.below(members.len() as u64) as usize])
        .collect();
    picked.sort_unstable();
    picked
}

fn draws_gallery(config: &EvalConfig) -> bool {
    config.cross.is_some_and(|c| c.dataset == CrossDataset::SysuMm01)
}

struct Pass<'a> {
    roles: Roles<'a>,
    qmeta: Vec<ImageMeta>,
    gmeta: Vec<ImageMeta>,
    clean_q: Option<EmbeddingMatrix>,
    clean_g: Option<EmbeddingMatrix>,
}

fn embed_checked(provider: &dyn EmbeddingProvider, req: EmbedRequest<'_>) -> Result<EmbeddingMatrix> {
    let m = provider.embed(&req)?;
    if m.rows() != req.records.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}: {} {} embeddings for `{}`, expected {}",
            provider.label(),
            m.rows(),
            req.side.name(),
            req.key,
            req.records.len()
        )));
    }
    Ok(m)
}

impl<'a> Pass<'a> {
    fn new(
        manifest: &'a DatasetManifest,
        provider: &dyn EmbeddingProvider,
        config: &EvalConfig,
        needs_clean: [bool; 2],
    ) -> Result<Self> {
        config.validate()?;
        let roles = Roles::new(manifest, config.cross.as_ref());
        if roles.query.is_empty() {
            return Err(Error::InvalidParameter(
                "manifest has no query images for this mode".into(),
            ));
        }
        if roles.gallery.is_empty() {
            return Err(Error::InvalidParameter(
                "manifest has no gallery images for this mode".into(),
            ));
        }
        let clean = |side: Side, needed: bool| -> Result<Option<EmbeddingMatrix>> {
            if !needed {
                return Ok(None);
            }
            let req = EmbedRequest {
                side,
                key: "clean",
                records: roles.records(side),
                plan: None,
            };
            embed_checked(provider, req).map(Some)
        };
        let clean_q = clean(Side::Query, needs_clean[0])?;
        let clean_g = clean(Side::Gallery, needs_clean[1])?;
        Ok(Pass {
            qmeta: roles.query.iter().map(|r| r.meta()).collect(),
            gmeta: roles.gallery.iter().map(|r| r.meta()).collect(),
            roles,
            clean_q,
            clean_g,
        })
    }

    fn side(
        &self,
        provider: &dyn EmbeddingProvider,
        side: Side,
        key: &str,
        plan: Option<&CorruptionPlan>,
    ) -> Result<EmbeddingMatrix> {
        let clean = match side {
            Side::Query => &self.clean_q,
            Side::Gallery => &self.clean_g,
        };
        match (plan, clean) {
            (None, Some(m)) => Ok(m.clone()),
            _ => embed_checked(
                provider,
                EmbedRequest {
                    side,
                    key,
                    records: self.roles.records(side),
                    plan,
                },
            ),
        }
    }

    fn score(
        &self,
        config: &EvalConfig,
        repeat: u32,
        q: &EmbeddingMatrix,
        g: &EmbeddingMatrix,
    ) -> Result<(MetricSummary, Option<GalleryDraw>, usize)> {
        let (g, gmeta, draw) = if draws_gallery(config) {
            let draw = repeat % config.gallery_draws;
            let seed = child_seed(config.master_seed, GALLERY_DRAW_TAG + draw as u64);
            let idx = gallery_draw(&self.roles.gallery, seed);
            let meta: Vec<ImageMeta> = idx.iter().map(|&i| self.gmeta[i].clone()).collect();
            (g.select(&idx), meta, Some((draw, seed)))
        } else {
            (g.clone(), self.gmeta.clone(), None)
        };
        let dist = pairwise_distances(q, &g, config.metric)?;
        let summary = evaluate(&dist, &self.qmeta, &gmeta, config.cmc_depth, config.mask_rule())?;
        Ok((summary, draw, gmeta.len()))
    }
}

/// Gallery draw index and its seed.
type GalleryDraw = (u32, u64);

fn repeat_info(repeat: u32, plan_entries: usize, draw: Option<GalleryDraw>, q: usize, g: usize) -> RepeatInfo {
    RepeatInfo {
        repeat,
        plan_entries,
        gallery_draw: draw.map(|d| d.0),
        gallery_draw_seed: draw.map(|d| d.1),
        query_size: q,
        gallery_size: g,
    }
}

/// Evaluates `config.repeats` repeats of `config.setting`.
///
/// Each repeat samples a fresh plan over the images the setting corrupts and
/// pairs corrupted or clean embeddings per side. Repeats run in parallel and
/// are reduced in repeat order.
pub fn run_eval(
    manifest: &DatasetManifest,
    provider: &dyn EmbeddingProvider,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let setting = config.setting;
    let needs_clean = [!setting.corrupts(Side::Query), !setting.corrupts(Side::Gallery)];
    let pass = Pass::new(manifest, provider, config, needs_clean)?;
    let targets = plan_targets(manifest, setting, config.cross.as_ref());

    let results: Vec<(MetricSummary, RepeatInfo)> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let plan = (setting != EvalSetting::Clean).then(|| sample_plan(&targets, config.master_seed, r));
            let key = format!("{}/{r}", setting.name());
            let side_plan = |side: Side| plan.as_ref().filter(|_| setting.corrupts(side));
            let q = pass.side(provider, Side::Query, &key, side_plan(Side::Query))?;
            let g = pass.side(provider, Side::Gallery, &key, side_plan(Side::Gallery))?;
            let (summary, draw, gsize) = pass.score(config, r, &q, &g)?;
            let entries = plan.as_ref().map_or(0, |p| p.entries.len());
            Ok((summary, repeat_info(r, entries, draw, q.rows(), gsize)))
        })
        .collect::<Result<_>>()?;

    let (summaries, info): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let row = ReportRow::from_summaries(provider.label(), provider.tap(), setting, None, &summaries);
    Ok(EvalReport::new(&manifest.dataset, config, info, vec![row]))
}

/// Evaluates each sweep cell with both query and gallery corrupted; a
/// severity-0 cell is the clean evaluation.
pub fn run_sweep(
    manifest: &DatasetManifest,
    provider: &dyn EmbeddingProvider,
    config: &EvalConfig,
    cells: &[SweepCell],
) -> Result<EvalReport> {
    for c in cells {
        c.validate()?;
    }
    let mut config = config.clone();
    config.setting = EvalSetting::Both;
    let needs_clean = cells.iter().any(|c| c.is_clean()) || config.cross.is_some();
    let pass = Pass::new(manifest, provider, &config, [needs_clean; 2])?;
    let targets = plan_targets(manifest, EvalSetting::Both, config.cross.as_ref());

    let mut rows = Vec::with_capacity(cells.len());
    let mut info = Vec::new();
    for cell in cells {
        let results: Vec<(MetricSummary, RepeatInfo)> = (0..config.repeats)
            .into_par_iter()
            .map(|r| {
                let plan = (!cell.is_clean()).then(|| cell_plan(&targets, *cell, config.master_seed, r));
                let key = if cell.is_clean() {
                    "clean".to_string()
                } else {
                    format!("sweep/{}/{r}", cell.label())
                };
                let q = pass.side(provider, Side::Query, &key, plan.as_ref())?;
                let g = pass.side(provider, Side::Gallery, &key, plan.as_ref())?;
                let (summary, draw, gsize) = pass.score(&config, r, &q, &g)?;
                let entries = plan.as_ref().map_or(0, |p| p.entries.len());
                Ok((summary, repeat_info(r, entries, draw, q.rows(), gsize)))
            })
            .collect::<Result<_>>()?;
        let (summaries, per_repeat): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        if info.is_empty() {
            info = per_repeat;
        }
        rows.push(ReportRow::from_summaries(
            provider.label(),
            provider.tap(),
            EvalSetting::Both,
            Some(*cell),
            &summaries,
        ));
    }
    Ok(EvalReport::new(&manifest.dataset, &config, info, rows))
}
