//! Dataset manifests and the binary embedding, logits and distance files.
//!
//! Manifests are JSON Lines: an optional header object carrying
//! `schema_version` and `dataset`, then one record per image. Binary files
//! share a 32-byte little-endian header that starts with a 4-byte magic and a
//! `u16` format version.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{EmbeddingMatrix, ImageMeta};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

pub const EMBEDDING_MAGIC: [u8; 4] = *b"CILE";
pub const LOGITS_MAGIC: [u8; 4] = *b"CILL";
pub const DISTANCE_MAGIC: [u8; 4] = *b"CILD";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    #[default]
    Rgb,
    Ir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Query,
    Gallery,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Query => "query",
            Split::Gallery => "gallery",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "query" => Ok(Split::Query),
            "gallery" => Ok(Split::Gallery),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub image_id: u64,
    pub path: PathBuf,
    pub person_id: u64,
    pub camera_id: u32,
    pub modality: Modality,
    pub split: Split,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub junk: bool,
}

impl ManifestRecord {
    pub fn meta(&self) -> ImageMeta {
        ImageMeta {
            image_id: self.image_id,
            person_id: self.person_id,
            camera_id: self.camera_id,
            junk: self.junk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ManifestHeader {
    schema_version: u32,
    dataset: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub dataset: String,
    pub records: Vec<ManifestRecord>,
    /// Directory that record paths are relative to.
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn new(dataset: impl Into<String>, records: Vec<ManifestRecord>) -> Result<Self> {
        let m = DatasetManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            dataset: dataset.into(),
            records,
            root: PathBuf::new(),
        };
        m.check_unique()?;
        Ok(m)
    }

    fn check_unique(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::EmptyManifest);
        }
        let mut seen = HashSet::with_capacity(self.records.len());
        for r in &self.records {
            if !seen.insert(r.image_id) {
                return Err(Error::DuplicateImageId(r.image_id));
            }
        }
        Ok(())
    }

    /// Records of one split, in manifest order.
    pub fn split(&self, split: Split) -> Vec<&ManifestRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    pub fn split_ids(&self, split: Split) -> Vec<u64> {
        self.split(split).iter().map(|r| r.image_id).collect()
    }

    pub fn split_meta(&self, split: Split) -> Vec<ImageMeta> {
        self.split(split).iter().map(|r| r.meta()).collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.records.iter().filter(|r| r.split == split).count()
    }

    pub fn get(&self, image_id: u64) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.image_id == image_id)
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        self.root.join(&record.path)
    }

    /// Checksum stored in embedding headers for this split.
    pub fn checksum(&self, split: Split) -> u64 {
        split_checksum(&self.split_ids(split))
    }

    pub fn validate_stats(&self, expected: &ExpectedStats) -> Result<()> {
        let checks = [
            (Split::Query, expected.query),
            (Split::Gallery, expected.gallery),
            (Split::Train, expected.train),
        ];
        for (split, want) in checks {
            let Some(want) = want else { continue };
            let got = self.count(split);
            // Train records are optional in evaluation manifests.
            if split == Split::Train && got == 0 {
                continue;
            }
            if got != want {
                return Err(Error::SplitCountMismatch {
                    split: split.name(),
                    expected: want,
                    actual: got,
                });
            }
        }
        Ok(())
    }

    /// Fails with [`Error::MissingImage`] on the first record whose file is absent.
    pub fn check_paths(&self) -> Result<()> {
        for r in &self.records {
            let p = self.resolve(r);
            if !p.is_file() {
                return Err(Error::MissingImage {
                    image_id: r.image_id,
                    path: p,
                });
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let header = ManifestHeader {
            schema_version: self.schema_version,
            dataset: self.dataset.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_jsonl().as_bytes())
    }
}

/// Published split sizes used to validate a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedStats {
    pub train: Option<usize>,
    pub query: Option<usize>,
    pub gallery: Option<usize>,
}

impl ExpectedStats {
    /// Split sizes of the standard releases. The SYSU-MM01 gallery is drawn
    /// per trial, so only its query size is fixed.
    pub fn preset(dataset: &str) -> Option<Self> {
        let s = |train, query, gallery| ExpectedStats {
            train: Some(train),
            query: Some(query),
            gallery,
        };
        Some(match normalize_dataset(dataset).as_str() {
            "market1501" => s(12_936, 3_368, Some(19_732)),
            "cuhk03" => s(7_365, 1_400, Some(5_332)),
            "msmt17" => s(32_621, 11_659, Some(82_161)),
            "regdb" => s(4_120, 2_060, Some(2_060)),
            "sysumm01" => s(34_167, 3_803, None),
            _ => return None,
        })
    }
}

/// Lower-cases and strips separators: `Market-1501` becomes `market1501`.
pub fn normalize_dataset(name: &str) -> String {
    let n: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    match n.as_str() {
        "market" => "market1501".into(),
        "cuhk03detected" => "cuhk03".into(),
        "sysu" => "sysumm01".into(),
        _ => n,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    image_id: u64,
    path: PathBuf,
    person_id: u64,
    camera_id: u32,
    #[serde(default)]
    modality: Modality,
    split: String,
    #[serde(default)]
    junk: bool,
}

/// Parses manifest text. `expected` checks split sizes when given.
pub fn parse_manifest(text: &str, expected: Option<&ExpectedStats>) -> Result<DatasetManifest> {
    let mut header: Option<ManifestHeader> = None;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::ManifestParse {
            line: line_no,
            message: e.to_string(),
        })?;
        if value.get("schema_version").is_some() {
            if header.is_some() || !records.is_empty() {
                return Err(Error::ManifestParse {
                    line: line_no,
                    message: "header must be the first line".into(),
                });
            }
            let h: ManifestHeader = serde_json::from_value(value).map_err(|e| Error::ManifestParse {
                line: line_no,
                message: e.to_string(),
            })?;
            if h.schema_version != MANIFEST_SCHEMA_VERSION {
                return Err(Error::ManifestParse {
                    line: line_no,
                    message: format!("unsupported schema_version {}", h.schema_version),
                });
            }
            header = Some(h);
            continue;
        }
        let raw: RawRecord = serde_json::from_value(value).map_err(|e| Error::ManifestParse {
            line: line_no,
            message: e.to_string(),
        })?;
        let split = raw
            .split
            .parse()
            .map_err(|value| Error::UnknownSplit { line: line_no, value })?;
        records.push(ManifestRecord {
            image_id: raw.image_id,
            path: raw.path,
            person_id: raw.person_id,
            camera_id: raw.camera_id,
            modality: raw.modality,
            split,
            junk: raw.junk,
        });
    }
    let header = header.unwrap_or(ManifestHeader {
        schema_version: MANIFEST_SCHEMA_VERSION,
        dataset: "custom".into(),
    });
    let manifest = DatasetManifest {
        schema_version: header.schema_version,
        dataset: header.dataset,
        records,
        root: PathBuf::new(),
    };
    manifest.check_unique()?;
    if let Some(e) = expected {
        manifest.validate_stats(e)?;
    }
    Ok(manifest)
}

/// Reads, parses and validates a manifest, then checks that every image file
/// exists relative to the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>, expected: Option<&ExpectedStats>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m = parse_manifest(&text, expected)?;
    m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    m.check_paths()?;
    Ok(m)
}

/// First 8 bytes (little-endian) of SHA-256 over the ids as `u64` LE.
pub fn split_checksum(ids: &[u64]) -> u64 {
    let mut h = Sha256::new();
    for id in ids {
        h.update(id.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Where in the network an embedding was read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tap {
    #[default]
    Unspecified,
    PreBnneck,
    PostBnneck,
}

impl Tap {
    fn code(self) -> u8 {
        match self {
            Tap::Unspecified => 0,
            Tap::PreBnneck => 1,
            Tap::PostBnneck => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Tap::Unspecified),
            1 => Some(Tap::PreBnneck),
            2 => Some(Tap::PostBnneck),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tap::Unspecified => "unspecified",
            Tap::PreBnneck => "pre-bnneck",
            Tap::PostBnneck => "post-bnneck",
        }
    }
}

impl FromStr for Tap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unspecified" => Ok(Tap::Unspecified),
            "pre-bnneck" => Ok(Tap::PreBnneck),
            "post-bnneck" => Ok(Tap::PostBnneck),
            _ => Err(Error::InvalidParameter(format!("unknown tap `{s}`"))),
        }
    }
}

/// Contents of a `CILE` file.
///
/// Header layout: magic, version `u16`, tap `u8`, reserved `u8`, count `u64`,
/// dim `u32`, reserved `u32`, manifest checksum `u64` (0 = not recorded).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub tap: Tap,
    pub checksum: u64,
    pub matrix: EmbeddingMatrix,
}

impl EmbeddingFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.matrix;
        let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * 4);
        out.extend_from_slice(&EMBEDDING_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.tap.code());
        out.push(0);
        out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&self.checksum.to_le_bytes());
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let h = Header::parse(path, bytes, EMBEDDING_MAGIC)?;
        let tap = Tap::from_code(h.byte6)
            .ok_or_else(|| Error::InvalidParameter(format!("{}: unknown tap code {}", path.display(), h.byte6)))?;
        let (count, dim) = (h.count as usize, h.dim as usize);
        let data = read_f32s(path, bytes, HEADER_LEN, count * dim)?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEmbedding {
                path: path.to_path_buf(),
                row: i / dim.max(1),
                col: i % dim.max(1),
            });
        }
        let matrix = EmbeddingMatrix::new(count, dim, data).map_err(|e| match e {
            Error::DimensionMismatch(m) => Error::DimensionMismatch(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(EmbeddingFile {
            tap,
            checksum: h.tail,
            matrix,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(path, &bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes())
    }
}

/// Reads an embedding file whose rows must align with `split` of `manifest`.
pub fn load_embeddings(path: impl AsRef<Path>, manifest: &DatasetManifest, split: Split) -> Result<EmbeddingFile> {
    load_embeddings_for(path, &manifest.split_ids(split))
}

/// Reads an embedding file whose rows must align with `ids`. A nonzero
/// header checksum must equal [`split_checksum`] of `ids`.
pub fn load_embeddings_for(path: impl AsRef<Path>, ids: &[u64]) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let file = EmbeddingFile::read(path)?;
    if file.matrix.rows() != ids.len() {
        return Err(Error::FileMismatch {
            path: path.to_path_buf(),
            what: "row count",
            expected: ids.len() as u64,
            actual: file.matrix.rows() as u64,
        });
    }
    let want = split_checksum(ids);
    if file.checksum != 0 && file.checksum != want {
        return Err(Error::FileMismatch {
            path: path.to_path_buf(),
            what: "manifest checksum",
            expected: want,
            actual: file.checksum,
        });
    }
    Ok(file)
}

/// Contents of a `CILL` file: labels plus one or three views of logits
/// (original and two augmentations).
///
/// Header layout: magic, version `u16`, views `u8`, reserved `u8`, n `u64`,
/// classes `u32`, reserved `u32` and `u64`. The payload holds `n` labels as
/// `u32` followed by `views * n * classes` `f32` logits, view-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitsFile {
    pub n: usize,
    pub classes: usize,
    pub labels: Vec<u32>,
    pub views: Vec<Vec<f32>>,
}

impl LogitsFile {
    pub fn new(n: usize, classes: usize, labels: Vec<u32>, views: Vec<Vec<f32>>) -> Result<Self> {
        if !(views.len() == 1 || views.len() == 3) {
            return Err(Error::InvalidParameter(format!(
                "{} logit views, expected 1 or 3",
                views.len()
            )));
        }
        if labels.len() != n || views.iter().any(|v| v.len() != n * classes) {
            return Err(Error::DimensionMismatch(format!("logits file shape {n} x {classes}")));
        }
        Ok(LogitsFile {
            n,
            classes,
            labels,
            views,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&LOGITS_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.views.len() as u8);
        out.push(0);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.classes as u32).to_le_bytes());
        out.extend_from_slice(&[0u8; 12]);
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        for v in self.views.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let h = Header::parse(path, bytes, LOGITS_MAGIC)?;
        let views = h.byte6 as usize;
        let (n, classes) = (h.count as usize, h.dim as usize);
        let label_bytes = n * 4;
        let labels: Vec<u32> = read_words(path, bytes, HEADER_LEN, n)?
            .into_iter()
            .map(u32::from_le_bytes)
            .collect();
        let data = read_f32s(path, bytes, HEADER_LEN + label_bytes, views * n * classes)?;
        let views = data.chunks(n * classes).map(<[f32]>::to_vec).collect();
        Self::new(n, classes, labels, views)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(path, &bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes())
    }

    pub fn view_rows(&self, view: usize) -> Vec<Vec<f64>> {
        self.views[view]
            .chunks(self.classes)
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    }
}

/// Contents of a `CILD` file: a row-major `f64` query-by-gallery matrix.
///
/// Header layout: magic, version `u16`, two reserved bytes, rows `u64`,
/// cols `u32`, reserved `u32` and `u64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DistanceFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 8);
        out.extend_from_slice(&DISTANCE_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        out.extend_from_slice(&[0u8; 12]);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let h = Header::parse(path, bytes, DISTANCE_MAGIC)?;
        let (rows, cols) = (h.count as usize, h.dim as usize);
        let n = rows * cols;
        let end = HEADER_LEN + n * 8;
        check_len(path, bytes, end)?;
        let data: Vec<f64> = bytes[HEADER_LEN..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEmbedding {
                path: path.to_path_buf(),
                row: i / cols.max(1),
                col: i % cols.max(1),
            });
        }
        Ok(DistanceFile { rows, cols, data })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(path, &bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes())
    }
}

struct Header {
    byte6: u8,
    count: u64,
    dim: u32,
    tail: u64,
}

impl Header {
    fn parse(path: &Path, bytes: &[u8], magic: [u8; 4]) -> Result<Self> {
        check_len(path, bytes, HEADER_LEN)?;
        let found: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
        if found != magic {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                expected: magic,
                found,
            });
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                path: path.to_path_buf(),
                version,
            });
        }
        Ok(Header {
            byte6: bytes[6],
            count: u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")),
            dim: u32::from_le_bytes(bytes[16..20].try_into().expect("4 bytes")),
            tail: u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes")),
        })
    }
}

fn check_len(path: &Path, bytes: &[u8], needed: usize) -> Result<()> {
    if bytes.len() < needed {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            expected: needed as u64,
        });
    }
    if bytes.len() > needed && needed > HEADER_LEN {
        return Err(Error::FileMismatch {
            path: path.to_path_buf(),
            what: "file length",
            expected: needed as u64,
            actual: bytes.len() as u64,
        });
    }
    Ok(())
}

fn read_words(path: &Path, bytes: &[u8], start: usize, n: usize) -> Result<Vec<[u8; 4]>> {
    if bytes.len() < start + n * 4 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            expected: (start + n * 4) as u64,
        });
    }
    Ok(bytes[start..start + n * 4]
        .chunks_exact(4)
        .map(|c| c.try_into().expect("4-byte chunk"))
        .collect())
}

fn read_f32s(path: &Path, bytes: &[u8], start: usize, n: usize) -> Result<Vec<f32>> {
    check_len(path, bytes, start + n * 4)?;
    Ok(read_words(path, bytes, start, n)?
        .into_iter()
        .map(f32::from_le_bytes)
        .collect())
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes to a unique sibling file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
