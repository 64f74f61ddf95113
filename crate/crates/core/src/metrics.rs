//! Ranking metrics for query/gallery retrieval: AP, INP, CMC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity and camera labels of one query or gallery image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image_id: u64,
    pub person_id: u64,
    pub camera_id: u32,
    #[serde(default)]
    pub junk: bool,
}

pub type QueryMeta = ImageMeta;
pub type GalleryMeta = ImageMeta;

/// Which gallery entries a query may be scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskRule {
    /// Same person on the same camera is excluded.
    #[default]
    Standard,
    /// No camera-based exclusion (RegDB has no camera labels).
    NoCamera,
    /// Standard rule plus the SYSU-MM01 exclusion of camera-2 gallery
    /// images for camera-3 queries of the same person.
    Sysu,
}

pub fn valid_mask(q: &QueryMeta, gallery: &[GalleryMeta], rule: MaskRule) -> Vec<bool> {
    gallery
        .iter()
        .map(|g| {
            if g.junk {
                return false;
            }
            let same_pid = g.person_id == q.person_id;
            match rule {
                MaskRule::Standard => !(same_pid && g.camera_id == q.camera_id),
                MaskRule::NoCamera => true,
                MaskRule::Sysu => !(same_pid && (g.camera_id == q.camera_id || (q.camera_id == 3 && g.camera_id == 2))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryEvaluation {
    pub ap: f64,
    pub inp: f64,
    /// Negative penalty, `(hardest_rank - n_matches) / hardest_rank`.
    pub np: f64,
    pub first_match_rank: usize,
    pub n_matches: usize,
    pub hardest_rank: usize,
}

/// Scores one query whose gallery has already been masked.
///
/// Ranks ascend by distance; equal distances keep gallery index order.
pub fn evaluate_query(distances: &[f64], relevance: &[bool]) -> Result<QueryEvaluation> {
    if distances.len() != relevance.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} distances vs {} relevance flags",
            distances.len(),
            relevance.len()
        )));
    }
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    score_ranking(order.iter().map(|&j| relevance[j]))
}

/// Like [`evaluate_query`] but drops entries whose mask flag is false first.
pub fn evaluate_query_masked(distances: &[f64], relevance: &[bool], mask: &[bool]) -> Result<QueryEvaluation> {
    if mask.len() != distances.len() || mask.len() != relevance.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} distances, {} relevance flags, {} mask flags",
            distances.len(),
            relevance.len(),
            mask.len()
        )));
    }
    let kept: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
    let d: Vec<f64> = kept.iter().map(|&j| distances[j]).collect();
    let r: Vec<bool> = kept.iter().map(|&j| relevance[j]).collect();
    evaluate_query(&d, &r)
}

fn score_ranking(ranked_hits: impl Iterator<Item = bool>) -> Result<QueryEvaluation> {
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    let mut first = 0usize;
    let mut last = 0usize;
    for (i, hit) in ranked_hits.enumerate() {
        if hit {
            let rank = i + 1;
            hits += 1;
            precision_sum += hits as f64 / rank as f64;
            if first == 0 {
                first = rank;
            }
            last = rank;
        }
    }
    if hits == 0 {
        return Err(Error::NoValidMatch);
    }
    Ok(QueryEvaluation {
        ap: precision_sum / hits as f64,
        inp: hits as f64 / last as f64,
        np: (last - hits) as f64 / last as f64,
        first_match_rank: first,
        n_matches: hits,
        hardest_rank: last,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub map: f64,
    pub minp: f64,
    /// `cmc[k - 1]` is the Rank-k accuracy.
    pub cmc: Vec<f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl MetricSummary {
    /// Rank-k accuracy, saturating at the last computed k.
    pub fn rank(&self, k: usize) -> f64 {
        let i = k.clamp(1, self.cmc.len()) - 1;
        self.cmc[i]
    }
}

/// Evaluates a row-major `n_q x n_g` distance matrix.
///
/// Queries without a valid match are skipped and counted. Per-query results
/// are reduced in query order, so the output does not depend on the thread
/// count.
pub fn evaluate(
    dist: &[f64],
    queries: &[QueryMeta],
    gallery: &[GalleryMeta],
    k: usize,
    rule: MaskRule,
) -> Result<MetricSummary> {
    let (nq, ng) = (queries.len(), gallery.len());
    if dist.len() != nq * ng {
        return Err(Error::DimensionMismatch(format!(
            "distance matrix has {} entries, expected {nq} x {ng}",
            dist.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("CMC depth k must be at least 1".into()));
    }
    if let Some(i) = dist.iter().position(|d| !d.is_finite()) {
        return Err(Error::NonFinite(format!(
            "distance at query {}, gallery {}",
            i / ng.max(1),
            i % ng.max(1)
        )));
    }
    let per_query: Vec<Option<QueryEvaluation>> = (0..nq)
        .into_par_iter()
        .map(|i| {
            let q = &queries[i];
            let row = &dist[i * ng..(i + 1) * ng];
            let mask = valid_mask(q, gallery, rule);
            let mut order: Vec<usize> = (0..ng).filter(|&j| mask[j]).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
            score_ranking(order.iter().map(|&j| gallery[j].person_id == q.person_id)).ok()
        })
        .collect();

    let mut ap_sum = 0.0;
    let mut inp_sum = 0.0;
    let mut within = vec![0usize; k];
    let mut evaluated = 0usize;
    for e in per_query.iter().flatten() {
        ap_sum += e.ap;
        inp_sum += e.inp;
        if e.first_match_rank <= k {
            within[e.first_match_rank - 1] += 1;
        }
        evaluated += 1;
    }
    let skipped = nq - evaluated;
    if evaluated == 0 {
        return Err(Error::AllQueriesSkipped(skipped));
    }
    let n = evaluated as f64;
    let mut acc = 0usize;
    let cmc = within
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / n
        })
        .collect();
    Ok(MetricSummary {
        map: ap_sum / n,
        minp: inp_sum / n,
        cmc,
        evaluated,
        skipped,
    })
}

/// Row-major matrix of embeddings, one row per image.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 || data.len() != rows * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} floats for {rows} rows of dimension {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "embedding row {}, column {}",
                i / dim,
                i % dim
            )));
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("ragged embedding rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix {
            rows: rows.len(),
            dim: self.dim,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMetric {
    /// Squared Euclidean distance between L2-normalized rows.
    #[default]
    NormalizedSquaredEuclidean,
    Euclidean,
}

/// Query-by-gallery distances, row-major, computed in f64.
pub fn pairwise_distances(q: &EmbeddingMatrix, g: &EmbeddingMatrix, metric: DistanceMetric) -> Result<Vec<f64>> {
    if q.dim != g.dim {
        return Err(Error::DimensionMismatch(format!(
            "query dimension {} vs gallery dimension {}",
            q.dim, g.dim
        )));
    }
    let prep = |m: &EmbeddingMatrix| -> Vec<Vec<f64>> {
        (0..m.rows)
            .map(|i| {
                let r: Vec<f64> = m.row(i).iter().map(|&v| v as f64).collect();
                if metric == DistanceMetric::NormalizedSquaredEuclidean {
                    let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n > 0.0 {
                        return r.iter().map(|v| v / n).collect();
                    }
                }
                r
            })
            .collect()
    };
    let (qr, gr) = (prep(q), prep(g));
    let rows: Vec<Vec<f64>> = qr
        .par_iter()
        .map(|a| {
            gr.iter()
                .map(|b| {
                    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    match metric {
                        DistanceMetric::NormalizedSquaredEuclidean => sq,
                        DistanceMetric::Euclidean => sq.sqrt(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.concat())
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter("pearson needs at least two samples".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pearson input".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hits_at(ranks: &[usize], len: usize) -> (Vec<f64>, Vec<bool>) {
        let d = (0..len).map(|i| i as f64).collect();
        let r = (1..=len).map(|i| ranks.contains(&i)).collect();
        (d, r)
    }

    fn meta(image_id: u64, person_id: u64, camera_id: u32) -> ImageMeta {
        ImageMeta {
            image_id,
            person_id,
            camera_id,
            junk: false,
        }
    }

    #[test]
    fn perfect_ranking() {
        let (d, r) = hits_at(&[1, 2, 3], 6);
        let e = evaluate_query(&d, &r).unwrap();
        assert_eq!((e.ap, e.inp, e.np), (1.0, 1.0, 0.0));
    }

    #[test]
    fn hits_at_one_and_three() {
        let (d, r) = hits_at(&[1, 3], 5);
        let e = evaluate_query(&d, &r).unwrap();
        assert!((e.ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((e.inp - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn late_hits_give_ap_below_inp() {
        let (d, r) = hits_at(&[4, 5], 8);
        let e = evaluate_query(&d, &r).unwrap();
        assert!((e.inp - 0.4).abs() < 1e-15);
        assert!((e.ap - 0.325).abs() < 1e-15);
        assert_eq!((e.first_match_rank, e.hardest_rank, e.n_matches), (4, 5, 2));
        assert_eq!(e.inp + e.np, 1.0);
    }

    #[test]
    fn ties_break_by_gallery_index() {
        let e = evaluate_query(&[0.5, 0.5, 0.5], &[false, false, true]).unwrap();
        assert_eq!(e.first_match_rank, 3);
        let e = evaluate_query(&[0.5, 0.5, 0.5], &[true, false, false]).unwrap();
        assert_eq!(e.first_match_rank, 1);
    }

    #[test]
    fn no_match_is_an_error() {
        assert!(matches!(
            evaluate_query(&[0.1, 0.2], &[false, false]),
            Err(Error::NoValidMatch)
        ));
    }

    #[test]
    fn masks() {
        let q = meta(0, 5, 1);
        let g = [meta(1, 5, 1), meta(2, 5, 2), meta(3, 6, 1)];
        assert_eq!(valid_mask(&q, &g, MaskRule::Standard), [false, true, true]);
        assert_eq!(valid_mask(&q, &g, MaskRule::NoCamera), [true, true, true]);
        let mut junk = g.clone();
        junk[2].junk = true;
        assert_eq!(valid_mask(&q, &junk, MaskRule::NoCamera), [true, true, false]);

        let q3 = meta(0, 5, 3);
        let sysu = [meta(1, 5, 2), meta(2, 6, 2), meta(3, 5, 1)];
        assert_eq!(valid_mask(&q3, &sysu, MaskRule::Sysu), [false, true, true]);
        assert_eq!(valid_mask(&q3, &sysu, MaskRule::Standard), [true, true, true]);
    }

    #[test]
    fn two_query_mean() {
        // Query 0: hits at ranks 1, 2, 3 of 3. Query 1: hits at ranks 1, 3.
        let q = [meta(0, 1, 0), meta(1, 2, 0)];
        let g = [
            meta(10, 1, 9),
            meta(11, 1, 9),
            meta(12, 1, 9),
            meta(13, 2, 9),
            meta(14, 3, 9),
            meta(15, 2, 9),
        ];
        let dist = [
            0.1, 0.2, 0.3, 0.9, 0.9, 0.9, //
            0.9, 0.9, 0.9, 0.1, 0.2, 0.3,
        ];
        let s = evaluate(&dist, &q, &g, 5, MaskRule::Standard).unwrap();
        assert!((s.map - (1.0 + 5.0 / 6.0) / 2.0).abs() < 1e-15);
        assert!((s.minp - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((s.map - 0.9167).abs() < 5e-5 && (s.minp - 0.8333).abs() < 5e-5);
    }

    #[test]
    fn diagonal_matches() {
        let n = 6;
        let q: Vec<_> = (0..n).map(|i| meta(i, i, 0)).collect();
        let g: Vec<_> = (0..n).map(|i| meta(100 + i, i, 1)).collect();
        let dist: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { 1.0 }).collect();
        let s = evaluate(&dist, &q, &g, 3, MaskRule::Standard).unwrap();
        assert_eq!((s.map, s.minp, s.rank(1)), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_skipped_is_an_error() {
        let q = [meta(0, 1, 0)];
        let g = [meta(1, 1, 0), meta(2, 2, 0)];
        assert!(matches!(
            evaluate(&[0.0, 1.0], &q, &g, 1, MaskRule::Standard),
            Err(Error::AllQueriesSkipped(1))
        ));
    }

    #[test]
    fn pearson_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::ZeroVariance("x"))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_against_covariance_formula() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.1, 1.9, 3.2, 3.8];
        // E[xy] - E[x]E[y] over the product of population deviations.
        let n = 4.0;
        let exy = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n;
        let ex = x.iter().sum::<f64>() / n;
        let ey = y.iter().sum::<f64>() / n;
        let vx = x.iter().map(|a| a * a).sum::<f64>() / n - ex * ex;
        let vy = y.iter().map(|b| b * b).sum::<f64>() / n - ey * ey;
        let want = (exy - ex * ey) / (vx * vy).sqrt();
        assert!((pearson(&x, &y).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn normalized_distance_orders_like_cosine() {
        let q = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let g = EmbeddingMatrix::from_rows(&[vec![10.0, 1.0], vec![0.5, 0.5], vec![-1.0, 0.0]]).unwrap();
        let d = pairwise_distances(&q, &g, DistanceMetric::NormalizedSquaredEuclidean).unwrap();
        assert!(d[0] < d[1] && d[1] < d[2]);
        assert!((d[2] - 4.0).abs() < 1e-12);
        let e = pairwise_distances(&q, &g, DistanceMetric::Euclidean).unwrap();
        assert!(e[1] < e[0]);
    }
}
