use std::fs;
use std::path::Path;

use reidc::corruption::CorruptionType;
use reidc::fixtures::person_image;
use reidc::io::{DatasetManifest, ManifestRecord, Modality, Split, Tap};
use reidc::metrics::{evaluate, pairwise_distances, EmbeddingMatrix, MaskRule};
use reidc::protocol::*;
use reidc::Result;

fn record(image_id: u64, person_id: u64, camera_id: u32, modality: Modality, split: Split) -> ManifestRecord {
    ManifestRecord {
        image_id,
        path: format!("images/{image_id}.png").into(),
        person_id,
        camera_id,
        modality,
        split,
        junk: false,
    }
}

fn small_fixture() -> DatasetManifest {
    synthetic_manifest(10, 4, 1, 3)
}

#[test]
fn golden_plan_matches_reference_script() {
    let golden = include_str!("data/plan_golden.json");
    let want: serde_json::Value = serde_json::from_str(golden).unwrap();
    let plan = sample_plan(&[0, 1, 2, 3], 0, 0);
    let got: serde_json::Value = serde_json::to_value(&plan).unwrap();
    assert_eq!(got, want);
}

#[test]
fn clean_single_repeat_equals_direct_evaluate() {
    let m = small_fixture();
    let provider = SyntheticProvider::new(SyntheticParams::default(), 5);
    let cfg = EvalConfig {
        setting: EvalSetting::Clean,
        repeats: 1,
        ..Default::default()
    };
    let report = run_eval(&m, &provider, &cfg).unwrap();

    let roles = Roles::new(&m, None);
    let embed = |side, recs| {
        provider
            .embed(&EmbedRequest {
                side,
                key: "clean",
                records: recs,
                plan: None,
            })
            .unwrap()
    };
    let q = embed(Side::Query, &roles.query);
    let g = embed(Side::Gallery, &roles.gallery);
    let d = pairwise_distances(&q, &g, cfg.metric).unwrap();
    let direct = evaluate(
        &d,
        &m.split_meta(Split::Query),
        &m.split_meta(Split::Gallery),
        cfg.cmc_depth,
        MaskRule::Standard,
    )
    .unwrap();
    let row = &report.rows[0];
    assert_eq!(row.map.mean, direct.map);
    assert_eq!(row.minp.mean, direct.minp);
    assert_eq!(row.rank1.mean, direct.rank(1));
}

/// Returns embeddings whose first coordinate flags corruption, to check
/// which side of each setting gets corrupted inputs.
struct Sentinel;

impl EmbeddingProvider for Sentinel {
    fn label(&self) -> String {
        "sentinel".into()
    }

    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbeddingMatrix> {
        let corrupted = req.plan.is_some() as u8 as f32;
        let rows: Vec<Vec<f32>> = req
            .records
            .iter()
            .map(|r| {
                let mut v = vec![0.0; 16];
                v[0] = corrupted;
                v[1 + (r.person_id % 15) as usize] = 1.0;
                v
            })
            .collect();
        EmbeddingMatrix::from_rows(&rows)
    }
}

struct Recorder(std::sync::Mutex<Vec<(Side, bool, String)>>);

impl EmbeddingProvider for Recorder {
    fn label(&self) -> String {
        "recorder".into()
    }

    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbeddingMatrix> {
        self.0
            .lock()
            .unwrap()
            .push((req.side, req.plan.is_some(), req.key.to_string()));
        Sentinel.embed(req)
    }
}

#[test]
fn settings_pair_clean_and_corrupted_sides() {
    let m = small_fixture();
    for setting in EvalSetting::ALL {
        let rec = Recorder(Default::default());
        let cfg = EvalConfig {
            setting,
            repeats: 2,
            ..Default::default()
        };
        run_eval(&m, &rec, &cfg).unwrap();
        let calls = rec.0.into_inner().unwrap();
        for side in [Side::Query, Side::Gallery] {
            let corrupted = calls.iter().filter(|c| c.0 == side && c.1).count();
            let clean = calls.iter().filter(|c| c.0 == side && !c.1).count();
            if setting.corrupts(side) {
                assert_eq!((corrupted, clean), (2, 0), "{setting} {side:?}");
                assert!(calls
                    .iter()
                    .any(|c| c.0 == side && c.2 == format!("{}/1", setting.name())));
            } else {
                assert_eq!((corrupted, clean), (0, 1), "{setting} {side:?}");
            }
        }
    }
}

#[test]
fn identical_repeats_have_zero_std() {
    let m = small_fixture();
    let cfg = EvalConfig {
        setting: EvalSetting::Both,
        repeats: 2,
        ..Default::default()
    };
    let r = run_eval(&m, &Sentinel, &cfg).unwrap();
    let row = &r.rows[0];
    assert_eq!(row.map.std, 0.0);
    assert_eq!(row.map.raw.len(), 2);
    assert_eq!(r.repeat_info.len(), 2);
}

#[test]
fn report_mean_is_mean_of_raws() {
    let m = synthetic_manifest(20, 5, 1, 3);
    let p = SyntheticProvider::new(SyntheticParams::default(), 2);
    let r = run_eval(
        &m,
        &p,
        &EvalConfig {
            repeats: 4,
            ..Default::default()
        },
    )
    .unwrap();
    for a in [&r.rows[0].map, &r.rows[0].minp, &r.rows[0].rank1] {
        let mean = a.raw.iter().sum::<f64>() / a.raw.len() as f64;
        assert!((a.mean - mean).abs() < 1e-12);
        let lo = a.raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = a.raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= a.mean && a.mean <= hi);
    }
}

#[test]
fn sweep_severity_zero_equals_clean() {
    let m = small_fixture();
    let p = SyntheticProvider::new(SyntheticParams::default(), 3);
    let cfg = EvalConfig {
        repeats: 2,
        ..Default::default()
    };
    let sweep = run_sweep(&m, &p, &cfg, &[SweepCell::fixed(CorruptionType::Fog, 0)]).unwrap();
    let clean = run_eval(
        &m,
        &p,
        &EvalConfig {
            setting: EvalSetting::Clean,
            ..cfg
        },
    )
    .unwrap();
    assert_eq!(sweep.rows[0].map, clean.rows[0].map);
    assert_eq!(sweep.rows[0].minp, clean.rows[0].minp);
    assert_eq!(sweep.rows[0].rank1, clean.rows[0].rank1);
}

#[test]
fn corruption_lowers_synthetic_map() {
    let m = synthetic_manifest(50, 10, 2, 5);
    let p = SyntheticProvider::new(SyntheticParams::default(), 0);
    let run = |setting| {
        run_eval(
            &m,
            &p,
            &EvalConfig {
                setting,
                repeats: 2,
                ..Default::default()
            },
        )
        .unwrap()
    };
    assert!(run(EvalSetting::Both).rows[0].map.mean < run(EvalSetting::Clean).rows[0].map.mean);
}

fn regdb_manifest() -> DatasetManifest {
    let mut recs = Vec::new();
    for pid in 0..6u64 {
        for k in 0..2u64 {
            recs.push(record(pid * 10 + k, pid, 0, Modality::Rgb, Split::Query));
            recs.push(record(pid * 10 + 5 + k, pid, 1, Modality::Ir, Split::Gallery));
        }
    }
    DatasetManifest::new("regdb", recs).unwrap()
}

#[test]
fn cross_modality_plans_never_touch_infrared() {
    let m = regdb_manifest();
    let ir: Vec<u64> = m
        .records
        .iter()
        .filter(|r| r.modality == Modality::Ir)
        .map(|r| r.image_id)
        .collect();
    for mode in [CrossMode::A, CrossMode::B] {
        for all in [false, true] {
            let mut cross = CrossModality::new(CrossDataset::Regdb, mode);
            cross.corrupt_all_rgb = all;
            for setting in EvalSetting::ALL {
                let t = plan_targets(&m, setting, Some(&cross));
                assert!(t.iter().all(|id| !ir.contains(id)), "{mode:?} {setting}");
            }
        }
    }
    // Visible-to-thermal: the visible images are queries, so gallery-only
    // corruption leaves nothing to corrupt unless all RGB is requested.
    let a = CrossModality::new(CrossDataset::Regdb, CrossMode::A);
    assert!(plan_targets(&m, EvalSetting::Both, Some(&a)).is_empty());
    let a_all = CrossModality {
        corrupt_all_rgb: true,
        ..a
    };
    assert_eq!(plan_targets(&m, EvalSetting::Both, Some(&a_all)).len(), 12);
    let b = CrossModality::new(CrossDataset::Regdb, CrossMode::B);
    assert_eq!(plan_targets(&m, EvalSetting::Both, Some(&b)).len(), 12);
}

fn write_images(m: &DatasetManifest, dir: &Path) {
    for r in &m.records {
        let p = dir.join(&r.path);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        person_image(16, 32, r.person_id, r.image_id).save_png(&p).unwrap();
    }
}

#[test]
fn materialize_layout_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small_fixture();
    write_images(&m, dir.path());
    m.root = dir.path().to_path_buf();
    let out = dir.path().join("out");

    let clean_cfg = EvalConfig {
        setting: EvalSetting::Clean,
        ..Default::default()
    };
    let s = materialize_setting(&m, &clean_cfg, 0, &out).unwrap();
    assert!(s.is_complete() && s.corrupted == 0);
    for r in &m.records {
        let a = reidc::Image::load(m.resolve(r)).unwrap();
        let b = reidc::Image::load(out.join("clean").join(format!("{}.png", r.image_id))).unwrap();
        assert_eq!(a, b);
    }

    let cfg = EvalConfig {
        setting: EvalSetting::Query,
        master_seed: 9,
        ..Default::default()
    };
    let s1 = materialize_setting(&m, &cfg, 1, &out).unwrap();
    assert_eq!(s1.dir, out.join("query").join("1"));
    assert_eq!(s1.written, m.count(Split::Query));
    let first: Vec<Vec<u8>> = m
        .split_ids(Split::Query)
        .iter()
        .map(|id| fs::read(s1.dir.join(format!("{id}.png"))).unwrap())
        .collect();
    materialize_setting(&m, &cfg, 1, &out).unwrap();
    let second: Vec<Vec<u8>> = m
        .split_ids(Split::Query)
        .iter()
        .map(|id| fs::read(s1.dir.join(format!("{id}.png"))).unwrap())
        .collect();
    assert_eq!(first, second);
    let plan = CorruptionPlan::read(s1.dir.join(PLAN_FILE)).unwrap();
    assert_eq!(plan, sample_plan(&m.split_ids(Split::Query), 9, 1));
    assert!(!s1.dir.join(INCOMPLETE_MARKER).exists());
}

#[test]
fn materialize_marks_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small_fixture();
    write_images(&m, dir.path());
    m.root = dir.path().to_path_buf();
    let victim = m.split_ids(Split::Query)[0];
    fs::write(dir.path().join(format!("images/{victim}.png")), b"not a png").unwrap();
    let cfg = EvalConfig {
        setting: EvalSetting::Query,
        ..Default::default()
    };
    let s = materialize_setting(&m, &cfg, 0, &dir.path().join("out")).unwrap();
    assert_eq!(s.failures.len(), 1);
    assert_eq!(s.failures[0].image_id, victim);
    assert!(s.dir.join(INCOMPLETE_MARKER).exists());
}

#[test]
fn file_embeddings_follow_key_layout() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_fixture();
    let roles = Roles::new(&m, None);
    let synth = SyntheticProvider::new(SyntheticParams::default(), 4);
    let cfg = EvalConfig {
        setting: EvalSetting::Gallery,
        repeats: 2,
        ..Default::default()
    };
    let write = |key: &str, side: Side, plan: Option<&CorruptionPlan>| {
        let recs = roles.records(side);
        let mat = synth
            .embed(&EmbedRequest {
                side,
                key,
                records: recs,
                plan,
            })
            .unwrap();
        let ids: Vec<u64> = recs.iter().map(|r| r.image_id).collect();
        reidc::io::EmbeddingFile {
            tap: Tap::PreBnneck,
            checksum: reidc::io::split_checksum(&ids),
            matrix: mat,
        }
        .write(FileEmbeddings::path_for(dir.path(), key, side))
        .unwrap();
    };
    write("clean", Side::Query, None);
    write("clean", Side::Gallery, None);
    let targets = plan_targets(&m, EvalSetting::Gallery, None);
    for r in 0..2 {
        let plan = sample_plan(&targets, 0, r);
        write(&format!("gallery/{r}"), Side::Gallery, Some(&plan));
    }
    let files = FileEmbeddings::open(dir.path(), None).unwrap();
    assert_eq!(files.tap(), Tap::PreBnneck);
    let from_files = run_eval(&m, &files, &cfg).unwrap();
    let direct = run_eval(&m, &synth, &cfg).unwrap();
    assert_eq!(from_files.rows[0].map, direct.rows[0].map);
    assert_eq!(from_files.rows[0].label, "pre-bnneck");
}

#[test]
fn sysu_gallery_draws_are_single_shot() {
    let mut recs = Vec::new();
    let mut id = 0;
    for pid in 0..4u64 {
        for cam in [1u32, 2, 4, 5] {
            for _ in 0..3 {
                recs.push(record(id, pid, cam, Modality::Rgb, Split::Gallery));
                id += 1;
            }
        }
        for cam in [3u32, 6] {
            recs.push(record(id, pid, cam, Modality::Ir, Split::Query));
            id += 1;
        }
    }
    let m = DatasetManifest::new("sysu-mm01", recs).unwrap();
    let all = CrossModality::new(CrossDataset::SysuMm01, CrossMode::A);
    let indoor = CrossModality::new(CrossDataset::SysuMm01, CrossMode::B);
    let roles = Roles::new(&m, Some(&all));
    assert_eq!(roles.query.len(), 8);
    assert_eq!(roles.gallery.len(), 48);
    assert_eq!(Roles::new(&m, Some(&indoor)).gallery.len(), 24);
    let draw = gallery_draw(&roles.gallery, 1);
    assert_eq!(draw.len(), 16);
    assert_ne!(draw, gallery_draw(&roles.gallery, 2));

    let p = SyntheticProvider::new(SyntheticParams::default(), 0);
    let cfg = EvalConfig {
        setting: EvalSetting::Gallery,
        repeats: 3,
        cross: Some(all),
        ..Default::default()
    };
    let r = run_eval(&m, &p, &cfg).unwrap();
    assert_eq!(r.mode.as_deref(), Some("all-search"));
    assert!(r
        .repeat_info
        .iter()
        .all(|i| i.gallery_size == 16 && i.gallery_draw.is_some()));
    assert_eq!(r.repeat_info[2].gallery_draw, Some(2));
}

#[test]
fn worker_count_does_not_change_report() {
    let m = synthetic_manifest(20, 6, 2, 3);
    let cfg = EvalConfig {
        repeats: 4,
        master_seed: 11,
        ..Default::default()
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            run_eval(&m, &SyntheticProvider::new(SyntheticParams::default(), 7), &cfg)
                .unwrap()
                .to_json()
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(16));
}
