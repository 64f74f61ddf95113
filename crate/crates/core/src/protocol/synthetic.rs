//! A synthetic embedder for end-to-end protocol tests.
//!
//! Images are procedural pedestrians from [`crate::fixtures`]; an embedding
//! is the identity's one-hot direction blurred by Gaussian noise whose scale
//! grows with the pixel distortion the corruption caused.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corruption::{apply_corruption, distortion_score, CorruptionSpec};
use crate::error::{Error, Result};
use crate::fixtures::person_image;
use crate::image::Image;
use crate::io::{DatasetManifest, ManifestRecord, Modality, Split};
use crate::metrics::EmbeddingMatrix;
use crate::rng::{child_seed, Stream};

use super::provider::{EmbedRequest, EmbeddingProvider};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub dim: usize,
    /// Noise scale of clean images.
    pub sigma0: f64,
    /// Extra noise scale per unit of distortion.
    pub sigma1: f64,
    /// Size of the procedural fixture images.
    pub width: u32,
    pub height: u32,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            dim: 128,
            sigma0: 0.12,
            sigma1: 0.8,
            width: 32,
            height: 64,
        }
    }
}

/// `normalize(onehot(person_id mod dim) * (1 - d) + g * (sigma0 + sigma1 * d))`
/// with `g` standard normal drawn from `seed`.
pub fn synthetic_embed(
    record: &ManifestRecord,
    distortion: f64,
    params: &SyntheticParams,
    seed: u64,
) -> Result<Vec<f32>> {
    if !(0.0..=1.0).contains(&distortion) {
        return Err(Error::InvalidParameter(format!(
            "distortion {distortion} outside [0, 1]"
        )));
    }
    if params.dim == 0 {
        return Err(Error::InvalidParameter("embedding dimension must be at least 1".into()));
    }
    let scale = params.sigma0 + params.sigma1 * distortion;
    let mut rng = Stream::new(seed);
    let mut v: Vec<f64> = (0..params.dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * scale
        })
        .collect();
    v[(record.person_id % params.dim as u64) as usize] += 1.0 - distortion;
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v.into_iter().map(|x| x as f32).collect())
}

/// A fixture manifest: `identities` people with `per_identity` images each,
/// the first `queries_per_identity` of which are queries. Image `k` of a
/// person is seen by camera `k % cameras`.
pub fn synthetic_manifest(
    identities: u64,
    per_identity: u64,
    queries_per_identity: u64,
    cameras: u32,
) -> DatasetManifest {
    let mut records = Vec::with_capacity((identities * per_identity) as usize);
    for pid in 0..identities {
        for k in 0..per_identity {
            let image_id = pid * per_identity + k;
            records.push(ManifestRecord {
                image_id,
                path: PathBuf::from(format!("images/{image_id}.png")),
                person_id: pid,
                camera_id: (k % cameras.max(1) as u64) as u32,
                modality: Modality::Rgb,
                split: if k < queries_per_identity {
                    Split::Query
                } else {
                    Split::Gallery
                },
                junk: false,
            });
        }
    }
    DatasetManifest::new("synthetic", records).expect("fixture ids are unique and non-empty")
}

/// Procedural image for a fixture record.
pub fn fixture_image(record: &ManifestRecord, params: &SyntheticParams) -> Image {
    person_image(params.width, params.height, record.person_id, record.image_id)
}

/// [`EmbeddingProvider`] over procedural images and [`synthetic_embed`].
#[derive(Debug)]
pub struct SyntheticProvider {
    params: SyntheticParams,
    seed: u64,
    cache: Mutex<HashMap<(u64, CorruptionSpec), f64>>,
}

impl SyntheticProvider {
    pub fn new(params: SyntheticParams, seed: u64) -> Self {
        SyntheticProvider {
            params,
            seed,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &SyntheticParams {
        &self.params
    }

    /// Pixel distortion of `record` under `spec`, memoized.
    pub fn distortion(&self, record: &ManifestRecord, spec: &CorruptionSpec) -> Result<f64> {
        if spec.severity == 0 {
            return Ok(0.0);
        }
        let key = (record.image_id, *spec);
        if let Some(&d) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(d);
        }
        let clean = fixture_image(record, &self.params);
        let d = distortion_score(&clean, &apply_corruption(&clean, spec)?)?;
        self.cache.lock().expect("cache lock").insert(key, d);
        Ok(d)
    }
}

impl EmbeddingProvider for SyntheticProvider {
    fn label(&self) -> String {
        "synthetic".into()
    }

    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbeddingMatrix> {
        let specs = req.plan.map(|p| p.lookup()).unwrap_or_default();
        let rows: Vec<Vec<f32>> = req
            .records
            .par_iter()
            .map(|r| {
                let d = match specs.get(&r.image_id) {
                    Some(spec) => self.distortion(r, spec)?,
                    None => 0.0,
                };
                synthetic_embed(r, d, &self.params, child_seed(self.seed, r.image_id))
            })
            .collect::<Result<_>>()?;
        if rows.is_empty() {
            return EmbeddingMatrix::new(0, self.params.dim, Vec::new());
        }
        EmbeddingMatrix::from_rows(&rows)
    }
}
