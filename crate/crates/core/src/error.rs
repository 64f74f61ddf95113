use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image must be at least 8x8 pixels, got {width}x{height}")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} bytes, expected {expected} for {width}x{height} RGB")]
    BufferLength {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("severity {0} is outside [0, 5]")]
    InvalidSeverity(u8),
    #[error("unknown corruption type `{0}`")]
    UnknownCorruption(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("augmentation op `{0}` is one of the held-out test corruptions")]
    ForbiddenAugOp(String),
    #[error("unknown augmentation op `{0}`")]
    UnknownAugOp(String),

    #[error("query has no valid gallery match")]
    NoValidMatch,
    #[error("every query was skipped ({0} queries without a valid match)")]
    AllQueriesSkipped(usize),
    #[error("zero variance input: {0}")]
    ZeroVariance(&'static str),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("support violation at index {index}: p = {p} but q = 0")]
    SupportViolation { index: usize, p: f64 },
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("manifest is empty")]
    EmptyManifest,
    #[error("duplicate image_id {0} in manifest")]
    DuplicateImageId(u64),
    #[error("line {line}: unknown split `{value}`")]
    UnknownSplit { line: usize, value: String },
    #[error("line {line}: {message}")]
    ManifestParse { line: usize, message: String },
    #[error("{split} split has {actual} records, expected {expected}")]
    SplitCountMismatch {
        split: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("image {image_id} not found at {path}")]
    MissingImage { image_id: u64, path: PathBuf },
    #[error("unknown image_id {0}")]
    UnknownImageId(u64),

    #[error("{path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },
    #[error("{path}: unsupported format version {version}")]
    UnsupportedVersion { path: PathBuf, version: u16 },
    #[error("{path}: truncated at byte offset {offset} (expected {expected} bytes)")]
    Truncated { path: PathBuf, offset: u64, expected: u64 },
    #[error("{path}: {what} mismatch, expected {expected}, found {actual}")]
    FileMismatch {
        path: PathBuf,
        what: &'static str,
        expected: u64,
        actual: u64,
    },
    #[error("{path}: non-finite value at row {row}, column {col}")]
    NonFiniteEmbedding { path: PathBuf, row: usize, col: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that signal a bug in this crate rather than bad input.
    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
