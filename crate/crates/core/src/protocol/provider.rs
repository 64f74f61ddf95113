use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::io::{load_embeddings_for, EmbeddingFile, ManifestRecord, Tap};
use crate::metrics::EmbeddingMatrix;

use super::plan::CorruptionPlan;
use super::Side;

/// One batch of images to embed.
#[derive(Debug, Clone, Copy)]
pub struct EmbedRequest<'a> {
    pub side: Side,
    /// Relative output key: `clean`, `<setting>/<repeat>` or
    /// `sweep/<cell>/<repeat>`.
    pub key: &'a str,
    pub records: &'a [&'a ManifestRecord],
    /// `None` for clean images; records without a plan entry stay clean.
    pub plan: Option<&'a CorruptionPlan>,
}

/// Source of embeddings for clean or corrupted images.
pub trait EmbeddingProvider: Sync {
    /// Row label in reports.
    fn label(&self) -> String;

    fn tap(&self) -> Tap {
        Tap::Unspecified
    }

    /// Returns one row per record, in request order.
    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbeddingMatrix>;
}

/// Embeddings precomputed by an external model, laid out as
/// `<root>/<key>/<side>.cile`.
#[derive(Debug, Clone)]
pub struct FileEmbeddings {
    root: PathBuf,
    label: String,
    tap: Tap,
}

impl FileEmbeddings {
    /// Takes the tap from `<root>/clean/query.cile` when it exists.
    pub fn open(root: impl Into<PathBuf>, label: Option<String>) -> Result<Self> {
        let root = root.into();
        let clean = root.join("clean").join("query.cile");
        let tap = if clean.is_file() {
            EmbeddingFile::read(&clean)?.tap
        } else {
            Tap::Unspecified
        };
        let label = label.unwrap_or_else(|| match tap {
            Tap::Unspecified => root
                .file_name()
                .map_or("embeddings".into(), |n| n.to_string_lossy().into_owned()),
            t => t.name().to_string(),
        });
        Ok(FileEmbeddings { root, label, tap })
    }

    pub fn path_for(root: &Path, key: &str, side: Side) -> PathBuf {
        root.join(key).join(format!("{}.cile", side.name()))
    }
}

impl EmbeddingProvider for FileEmbeddings {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn tap(&self) -> Tap {
        self.tap
    }

    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbeddingMatrix> {
        let ids: Vec<u64> = req.records.iter().map(|r| r.image_id).collect();
        let path = Self::path_for(&self.root, req.key, req.side);
        Ok(load_embeddings_for(path, &ids)?.matrix)
    }
}
