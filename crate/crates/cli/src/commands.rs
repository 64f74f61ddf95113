use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use reidc::corruption::{apply_corruption, CorruptionSpec, CorruptionType};
use reidc::io::{
    parse_manifest, split_checksum, write_atomic, DatasetManifest, DistanceFile, EmbeddingFile, LogitsFile, Tap,
};
use reidc::loss::{
    combined_objective, consistent_id_loss, identity_loss, BatchLabels, PosteriorTriple, DEFAULT_LAMBDA_CID,
};
use reidc::metrics::{evaluate, pearson, EmbeddingMatrix};
use reidc::protocol::*;
use reidc::Image;
use serde_json::{json, Value};

use crate::config::Settings;
use crate::Usage;

fn out_required(s: &Settings) -> Result<&Path> {
    s.out.as_deref().ok_or_else(|| Usage("--out is required".into()).into())
}

/// Parses a manifest; `check_paths` additionally requires every image file.
fn read_manifest(path: &Path, s: &Settings, check_paths: bool) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let mut m = parse_manifest(&text, None).with_context(|| format!("manifest {}", path.display()))?;
    if let Some(stats) = s.expected_stats(&m.dataset) {
        m.validate_stats(&stats)
            .with_context(|| format!("manifest {}", path.display()))?;
    }
    m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if check_paths {
        m.check_paths()?;
    }
    Ok(m)
}

/// Writes to `path`, or prints when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_ids(spec: &str) -> Result<Vec<u64>> {
    let bad = || Usage(format!("cannot parse ids `{spec}`; use `0..4`, `0-3` or `1,5,9`"));
    let num = |v: &str| v.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = spec.split_once("..") {
        return Ok((num(a)?..num(b)?).collect());
    }
    if let Some((a, b)) = spec.split_once('-') {
        return Ok((num(a)?..=num(b)?).collect());
    }
    Ok(spec.split(',').map(num).collect::<std::result::Result<_, _>>()?)
}

fn parse_severities(spec: &str) -> Result<Vec<u8>> {
    let bad = || Usage(format!("cannot parse severities `{spec}`; use `1-5` or `0,2,4`"));
    let num = |v: &str| v.trim().parse::<u8>().map_err(|_| bad());
    let list: Vec<u8> = match spec.split_once('-') {
        Some((a, b)) => (num(a)?..=num(b)?).collect(),
        None => spec.split(',').map(num).collect::<std::result::Result<_, _>>()?,
    };
    if list.is_empty() {
        return Err(bad().into());
    }
    Ok(list)
}

/// Selection of fixed corruption cells.
#[derive(Debug, Clone, Default, Args)]
pub struct CellArgs {
    /// Cells such as `gaussian-noise-s3`, `level-2`, `fog` or `random`,
    /// comma separated.
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<SweepCell>,
    /// Corruption type to sweep; with --severities, one cell per severity.
    #[arg(long = "type")]
    pub ctype: Option<CorruptionType>,
    /// Severities, e.g. `1-5` or `0,1,3`. Without --type, every image gets a
    /// random type at each level.
    #[arg(long)]
    pub severities: Option<String>,
}

impl CellArgs {
    pub fn resolve(&self) -> Result<Vec<SweepCell>> {
        let mut cells = self.cells.clone();
        let sev = self.severities.as_deref().map(parse_severities).transpose()?;
        match (self.ctype, sev) {
            (Some(t), Some(s)) => cells.extend(s.into_iter().map(|v| SweepCell::fixed(t, v))),
            (Some(t), None) => cells.push(SweepCell::of_type(t)),
            (None, Some(s)) => cells.extend(s.into_iter().map(SweepCell::level)),
            (None, None) => {}
        }
        for c in &cells {
            c.validate()?;
        }
        Ok(cells)
    }
}

fn repeat_list(repeat: Option<u32>, cfg: &EvalConfig) -> Vec<u32> {
    repeat.map_or_else(|| (0..cfg.repeats).collect(), |r| vec![r])
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Manifest (JSON Lines); targets follow --setting and --mode.
    #[arg(long, required_unless_present = "ids", conflicts_with = "ids")]
    manifest: Option<PathBuf>,
    /// Image ids instead of a manifest: `0..4`, `0-3` or `1,5,9`.
    #[arg(long)]
    ids: Option<String>,
    /// A single repeat index (default: every repeat).
    #[arg(long)]
    repeat: Option<u32>,
    #[command(flatten)]
    cells: CellArgs,
}

pub fn plan(s: &Settings, a: PlanArgs) -> Result<()> {
    let cells = a.cells.resolve()?;
    let (targets_random, targets_cells, cfg) = match (&a.manifest, &a.ids) {
        (Some(path), _) => {
            let m = read_manifest(path, s, false)?;
            let cfg = s.eval_config(&m.dataset)?;
            let random = plan_targets(&m, cfg.setting, cfg.cross.as_ref());
            let both = plan_targets(&m, EvalSetting::Both, cfg.cross.as_ref());
            (random, both, cfg)
        }
        (None, Some(ids)) => {
            let ids = parse_ids(ids)?;
            (ids.clone(), ids, s.eval_config("custom")?)
        }
        (None, None) => unreachable!("clap requires --manifest or --ids"),
    };
    if cells.is_empty() && cfg.setting == EvalSetting::Clean {
        return Err(Usage("the clean setting has no corruption plan".into()).into());
    }
    let mut plans = Vec::new();
    for r in repeat_list(a.repeat, &cfg) {
        if cells.is_empty() {
            let dir = PathBuf::from(cfg.setting.name()).join(r.to_string());
            plans.push((dir, sample_plan(&targets_random, cfg.master_seed, r)));
        }
        for c in cells.iter().filter(|c| !c.is_clean()) {
            let dir = PathBuf::from("sweep").join(c.label()).join(r.to_string());
            plans.push((dir, cell_plan(&targets_cells, *c, cfg.master_seed, r)));
        }
    }
    match &s.out {
        Some(out) => {
            for (dir, p) in &plans {
                write_atomic(&out.join(dir).join(PLAN_FILE), p.to_json().as_bytes())?;
            }
            eprintln!("wrote {} plan(s) under {}", plans.len(), out.display());
        }
        None if plans.len() == 1 => print!("{}", plans[0].1.to_json()),
        None => {
            let all: Vec<&CorruptionPlan> = plans.iter().map(|(_, p)| p).collect();
            println!("{}", serde_json::to_string_pretty(&all)?);
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// Manifest whose images are materialized under --out.
    #[arg(long, required_unless_present = "image", conflicts_with = "image")]
    manifest: Option<PathBuf>,
    /// Corrupt one image file instead; needs --type and --severity and
    /// writes a PNG to --out.
    #[arg(long, requires_all = ["ctype", "severity"])]
    image: Option<PathBuf>,
    /// Severity for --image (0 to 5).
    #[arg(long)]
    severity: Option<u8>,
    /// A single repeat index (default: every repeat).
    #[arg(long)]
    repeat: Option<u32>,
    /// Do not write the clean copy under `<out>/clean/`.
    #[arg(long)]
    skip_clean: bool,
    #[command(flatten)]
    cells: CellArgs,
}

pub fn corrupt(s: &Settings, a: CorruptArgs) -> Result<()> {
    let out = out_required(s)?;
    if let Some(path) = &a.image {
        let (Some(t), Some(sev)) = (a.cells.ctype, a.severity) else {
            unreachable!("clap requires --type and --severity");
        };
        let img = Image::load(path)?;
        let spec = CorruptionSpec::new(t, sev, s.seed)?;
        apply_corruption(&img, &spec)?.save_png(out)?;
        eprintln!("wrote {}", out.display());
        return Ok(());
    }
    let m = read_manifest(a.manifest.as_deref().expect("clap requires --manifest"), s, false)?;
    let cfg = s.eval_config(&m.dataset)?;
    let cells = a.cells.resolve()?;
    let mut summaries = Vec::new();
    if !a.skip_clean {
        let clean = EvalConfig {
            setting: EvalSetting::Clean,
            ..cfg.clone()
        };
        summaries.push(materialize_setting(&m, &clean, 0, out)?);
    }
    for r in repeat_list(a.repeat, &cfg) {
        if cells.is_empty() && cfg.setting != EvalSetting::Clean {
            summaries.push(materialize_setting(&m, &cfg, r, out)?);
        }
        for c in cells.iter().filter(|c| !c.is_clean()) {
            summaries.push(materialize_cell(&m, &cfg, *c, r, out)?);
        }
    }
    let mut failed = 0;
    for sum in &summaries {
        eprintln!(
            "{}: {} images, {} corrupted",
            sum.dir.display(),
            sum.written,
            sum.corrupted
        );
        for f in &sum.failures {
            eprintln!("  image {}: {}", f.image_id, f.message);
        }
        failed += sum.failures.len();
    }
    if failed > 0 {
        bail!("{failed} images could not be written; affected directories keep `{INCOMPLETE_MARKER}`");
    }
    Ok(())
}

fn providers(dirs: &[PathBuf], labels: &[String]) -> Result<Vec<FileEmbeddings>> {
    if !labels.is_empty() && labels.len() != dirs.len() {
        return Err(Usage(format!(
            "{} labels for {} embedding directories",
            labels.len(),
            dirs.len()
        ))
        .into());
    }
    dirs.iter()
        .enumerate()
        .map(|(i, d)| {
            if !d.is_dir() {
                bail!("embedding directory {} does not exist", d.display());
            }
            Ok(FileEmbeddings::open(d, labels.get(i).cloned())?)
        })
        .collect()
}

/// Runs `f` per provider and merges the rows into one report.
fn combined_report(
    list: &[FileEmbeddings],
    f: impl Fn(&FileEmbeddings) -> reidc::Result<EvalReport>,
) -> Result<EvalReport> {
    let mut report: Option<EvalReport> = None;
    for p in list {
        let r = f(p).with_context(|| format!("embeddings `{}`", p.label()))?;
        match &mut report {
            Some(acc) => acc.merge(r)?,
            None => report = Some(r),
        }
    }
    report.ok_or_else(|| Usage("no embedding directories given".into()).into())
}

fn finish_report(s: &Settings, mut report: EvalReport, resolved: Value, csv: Option<&Path>) -> Result<()> {
    report.resolved_config = Some(resolved);
    if let Some(path) = csv {
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    match &s.out {
        Some(path) => {
            report.write_json(path)?;
            print!("{}", report.to_table());
        }
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Manifest (JSON Lines) of the split the embeddings were computed from.
    #[arg(long)]
    manifest: PathBuf,
    /// Embedding directories laid out as `<dir>/<key>/<side>.cile`; each
    /// adds one report row, e.g. pre- and post-BNNeck taps.
    #[arg(long, num_args = 1.., required_unless_present = "distances")]
    embeddings: Vec<PathBuf>,
    /// Row labels, one per embedding directory.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    /// Score a precomputed query x gallery distance file (CILD) instead.
    #[arg(long, conflicts_with = "embeddings")]
    distances: Option<PathBuf>,
    /// Also write the report table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn eval(s: &Settings, a: EvalArgs) -> Result<()> {
    let m = read_manifest(&a.manifest, s, false)?;
    let cfg = s.eval_config(&m.dataset)?;
    if let Some(path) = &a.distances {
        return eval_distances(s, &m, &cfg, path, &a.manifest);
    }
    let list = providers(&a.embeddings, &a.labels)?;
    let report = combined_report(&list, |p| run_eval(&m, p, &cfg))?;
    let resolved = s.resolved(
        "eval",
        &cfg,
        &m.dataset,
        json!({ "manifest": a.manifest, "embeddings": a.embeddings, "labels": a.labels }),
    );
    finish_report(s, report, resolved, a.csv.as_deref())
}

fn eval_distances(s: &Settings, m: &DatasetManifest, cfg: &EvalConfig, path: &Path, manifest: &Path) -> Result<()> {
    let d = DistanceFile::read(path)?;
    let roles = Roles::new(m, cfg.cross.as_ref());
    let qmeta: Vec<_> = roles.query.iter().map(|r| r.meta()).collect();
    let gmeta: Vec<_> = roles.gallery.iter().map(|r| r.meta()).collect();
    if d.rows != qmeta.len() || d.cols != gmeta.len() {
        bail!(
            "{}: {}x{} distances, manifest has {} queries and {} gallery images",
            path.display(),
            d.rows,
            d.cols,
            qmeta.len(),
            gmeta.len()
        );
    }
    let summary = evaluate(&d.data, &qmeta, &gmeta, cfg.cmc_depth, cfg.mask_rule())?;
    let out = json!({
        "toolkit_version": reidc::VERSION,
        "dataset": m.dataset,
        "summary": summary,
        "resolved_config": s.resolved("eval", cfg, &m.dataset, json!({ "manifest": manifest, "distances": path })),
    });
    emit(s.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Manifest (JSON Lines) of the split the embeddings were computed from.
    #[arg(long)]
    manifest: PathBuf,
    /// Embedding directories laid out as `<dir>/sweep/<cell>/<repeat>/<side>.cile`.
    #[arg(long, num_args = 1.., required = true)]
    embeddings: Vec<PathBuf>,
    /// Row labels, one per embedding directory.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    #[command(flatten)]
    cells: CellArgs,
    /// Also write the report table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn sweep(s: &Settings, a: SweepArgs) -> Result<()> {
    let cells = a.cells.resolve()?;
    if cells.is_empty() {
        return Err(Usage("no sweep cells; use --cells, --type or --severities".into()).into());
    }
    let m = read_manifest(&a.manifest, s, false)?;
    let cfg = s.eval_config(&m.dataset)?;
    let list = providers(&a.embeddings, &a.labels)?;
    let report = combined_report(&list, |p| run_sweep(&m, p, &cfg, &cells))?;
    let labels: Vec<String> = cells.iter().map(SweepCell::label).collect();
    let resolved = s.resolved(
        "sweep",
        &report.config,
        &m.dataset,
        json!({ "manifest": a.manifest, "embeddings": a.embeddings, "labels": a.labels, "cells": labels }),
    );
    finish_report(s, report, resolved, a.csv.as_deref())
}

/// Synthetic provider that also stores every batch it embeds.
struct Recording<'a> {
    inner: SyntheticProvider,
    root: &'a Path,
    tap: Tap,
}

impl EmbeddingProvider for Recording<'_> {
    fn label(&self) -> String {
        self.inner.label()
    }

    fn tap(&self) -> Tap {
        self.tap
    }

    fn embed(&self, req: &EmbedRequest<'_>) -> reidc::Result<EmbeddingMatrix> {
        let matrix = self.inner.embed(req)?;
        let ids: Vec<u64> = req.records.iter().map(|r| r.image_id).collect();
        let file = EmbeddingFile {
            tap: self.tap,
            checksum: split_checksum(&ids),
            matrix,
        };
        file.write(FileEmbeddings::path_for(self.root, req.key, req.side))?;
        Ok(file.matrix)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Manifest to embed. Without it a synthetic manifest is generated and
    /// written to `<out>/manifest.jsonl`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Identities of the generated manifest.
    #[arg(long, default_value_t = 50)]
    identities: u64,
    /// Images per identity of the generated manifest.
    #[arg(long, default_value_t = 10)]
    per_identity: u64,
    /// Query images per identity of the generated manifest.
    #[arg(long, default_value_t = 2)]
    queries_per_identity: u64,
    /// Cameras of the generated manifest.
    #[arg(long, default_value_t = 5)]
    cameras: u32,
    /// Embedding dimension.
    #[arg(long, default_value_t = 128)]
    dim: usize,
    /// Tap recorded in the embedding headers.
    #[arg(long)]
    tap: Option<Tap>,
    #[command(flatten)]
    cells: CellArgs,
}

pub fn synth_embed(s: &Settings, a: SynthArgs) -> Result<()> {
    let out = out_required(s)?;
    let m = match &a.manifest {
        Some(p) => read_manifest(p, s, false)?,
        None => {
            if a.identities == 0 || a.queries_per_identity >= a.per_identity || a.cameras == 0 {
                return Err(Usage(
                    "generated manifest needs identities >= 1, per-identity > queries, cameras >= 1".into(),
                )
                .into());
            }
            let m = synthetic_manifest(a.identities, a.per_identity, a.queries_per_identity, a.cameras);
            m.save(out.join("manifest.jsonl"))?;
            m
        }
    };
    if a.dim == 0 {
        return Err(Usage("--dim must be at least 1".into()).into());
    }
    let cfg = s.eval_config(&m.dataset)?;
    let cells = a.cells.resolve()?;
    let params = SyntheticParams {
        dim: a.dim,
        ..Default::default()
    };
    let provider = Recording {
        inner: SyntheticProvider::new(params, s.seed),
        root: out,
        tap: a.tap.unwrap_or(Tap::Unspecified),
    };
    let report = if cells.is_empty() {
        // Clean embeddings are always written so any setting can be scored.
        if cfg.setting != EvalSetting::Clean {
            run_eval(
                &m,
                &provider,
                &EvalConfig {
                    setting: EvalSetting::Clean,
                    repeats: 1,
                    ..cfg.clone()
                },
            )?;
        }
        run_eval(&m, &provider, &cfg)?
    } else {
        run_sweep(&m, &provider, &cfg, &cells)?
    };
    print!("{}", report.to_table());
    eprintln!("wrote synthetic embeddings under {}", out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Logits file (CILL) with one view, or three views: original and two
    /// augmentations.
    #[arg(long)]
    logits: PathBuf,
    /// Weight of the consistent-ID term.
    #[arg(long, default_value_t = DEFAULT_LAMBDA_CID)]
    lambda: f64,
}

pub fn losses(s: &Settings, a: LossArgs) -> Result<()> {
    let f = LogitsFile::read(&a.logits)?;
    let labels: Vec<usize> = f.labels.iter().map(|&l| l as usize).collect();
    let batch = BatchLabels::from_rows(&f.view_rows(0), labels)?;
    let id = identity_loss(&batch)?;
    let mut out = json!({
        "logits": a.logits,
        "n": f.n,
        "classes": f.classes,
        "views": f.views.len(),
        "identity_loss": id,
    });
    if f.views.len() == 3 {
        let (v0, v1, v2) = (f.view_rows(0), f.view_rows(1), f.view_rows(2));
        let triples = (0..f.n)
            .map(|i| PosteriorTriple::from_logits(&v0[i], &v1[i], &v2[i]))
            .collect::<reidc::Result<Vec<_>>>()?;
        let cid = triples.iter().map(consistent_id_loss).sum::<f64>() / triples.len().max(1) as f64;
        out["consistent_id_loss"] = json!(cid);
        out["lambda_cid"] = json!(a.lambda);
        out["combined"] = json!(combined_objective(&batch, &triples, a.lambda)?);
    }
    emit(s.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON to print as a table.
    #[arg(required_unless_present = "correlate", conflicts_with = "correlate")]
    input: Option<PathBuf>,
    /// Two CSV files of `label,value` rows (or one value per row, paired in
    /// order); prints Pearson's correlation.
    #[arg(long, num_args = 2, value_names = ["X", "Y"])]
    correlate: Vec<PathBuf>,
    /// Write the report table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// `(label, value)` pairs; rows whose value is not numeric (headers) are skipped.
fn read_series(path: &Path) -> Result<Vec<(Option<String>, f64)>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.with_context(|| format!("parsing {}", path.display()))?;
        let Some(Ok(v)) = rec.iter().next_back().map(str::parse::<f64>) else {
            continue;
        };
        let label = (rec.len() >= 2).then(|| rec[0].to_string());
        out.push((label, v));
    }
    if out.is_empty() {
        bail!("{}: no numeric rows", path.display());
    }
    Ok(out)
}

fn paired(x: &[(Option<String>, f64)], y: &[(Option<String>, f64)]) -> Result<(Vec<f64>, Vec<f64>, Vec<String>)> {
    let labelled = |s: &[(Option<String>, f64)]| s.iter().all(|(l, _)| l.is_some());
    if labelled(x) && labelled(y) {
        let ys: HashMap<&str, f64> = y.iter().map(|(l, v)| (l.as_deref().unwrap(), *v)).collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut names = Vec::new();
        for (l, v) in x {
            let l = l.as_deref().unwrap();
            let w = ys
                .get(l)
                .ok_or_else(|| anyhow!("label `{l}` missing from the second table"))?;
            a.push(*v);
            b.push(*w);
            names.push(l.to_string());
        }
        return Ok((a, b, names));
    }
    if x.len() != y.len() {
        bail!("tables have {} and {} rows", x.len(), y.len());
    }
    Ok((
        x.iter().map(|p| p.1).collect(),
        y.iter().map(|p| p.1).collect(),
        Vec::new(),
    ))
}

pub fn report(s: &Settings, a: ReportArgs) -> Result<()> {
    if let [xp, yp] = a.correlate.as_slice() {
        let (x, y, labels) = paired(&read_series(xp)?, &read_series(yp)?)?;
        let r = pearson(&x, &y)?;
        println!("pearson r = {r:.6} (n = {})", x.len());
        if let Some(out) = &s.out {
            let v = json!({ "x": xp, "y": yp, "n": x.len(), "labels": labels, "pearson": r });
            write_atomic(out, (serde_json::to_string_pretty(&v)? + "\n").as_bytes())?;
        }
        return Ok(());
    }
    let path = a.input.expect("clap requires an input report");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let report = EvalReport::from_json(&text)?;
    if let Some(csv) = &a.csv {
        write_atomic(csv, report.to_csv().as_bytes())?;
    }
    print!("{}", report.to_table());
    Ok(())
}
