//! Identity (cross-entropy) loss and the consistent identity loss, a
//! Jensen-Shannon divergence over three posteriors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied inside logarithms.
pub const LOG_EPS: f64 = 1e-12;

/// Tolerance on probability vectors summing to one.
pub const SUM_TOL: f64 = 1e-9;

pub const DEFAULT_LAMBDA_CID: f64 = 1.0;

/// Row-major `n x classes` logits with one label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLabels {
    n: usize,
    classes: usize,
    logits: Vec<f64>,
    labels: Vec<usize>,
}

impl BatchLabels {
    pub fn new(n: usize, classes: usize, logits: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if n == 0 || classes == 0 {
            return Err(Error::InvalidParameter(
                "batch needs at least one row and one class".into(),
            ));
        }
        if logits.len() != n * classes || labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} logits and {} labels for a {n} x {classes} batch",
                logits.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y >= classes) {
            return Err(Error::InvalidParameter(format!(
                "label {} at row {i} is outside [0, {classes})",
                labels[i]
            )));
        }
        if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "logit at row {}, class {}",
                i / classes,
                i % classes
            )));
        }
        Ok(BatchLabels {
            n,
            classes,
            logits,
            labels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != classes) {
            return Err(Error::DimensionMismatch("ragged logit rows".into()));
        }
        Self::new(rows.len(), classes, rows.concat(), labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.logits[i * self.classes..(i + 1) * self.classes]
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Numerically stable softmax of one row.
pub fn softmax(row: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(row);
    row.iter().map(|v| (v - lse).exp()).collect()
}

/// Mean negative log-likelihood of the labels.
pub fn identity_loss(batch: &BatchLabels) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..batch.n {
        let row = batch.row(i);
        total += log_sum_exp(row) - row[batch.labels[i]];
    }
    let loss = total / batch.n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("identity loss".into()));
    }
    Ok(loss.max(0.0))
}

/// Gradient of [`identity_loss`] with respect to the logits,
/// `(softmax - onehot) / n`, row-major.
pub fn identity_loss_grad(batch: &BatchLabels) -> Result<Vec<f64>> {
    let scale = 1.0 / batch.n as f64;
    let mut grad = Vec::with_capacity(batch.logits.len());
    for i in 0..batch.n {
        let p = softmax(batch.row(i));
        grad.extend(
            p.iter()
                .enumerate()
                .map(|(j, &pj)| (pj - if j == batch.labels[i] { 1.0 } else { 0.0 }) * scale),
        );
    }
    Ok(grad)
}

/// `sum p ln(p / q)` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} classes", p.len(), q.len())));
    }
    let mut total = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite(format!("probability at index {i}")));
        }
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportViolation { index: i, p: a });
            }
            total += a * (a.max(LOG_EPS).ln() - b.max(LOG_EPS).ln());
        }
    }
    Ok(total.max(0.0))
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if let Some(i) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistribution(format!("{name}[{i}] = {}", p[i])));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// Posteriors for an image and two augmented views, plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTriple {
    p_orig: Vec<f64>,
    p_aug1: Vec<f64>,
    p_aug2: Vec<f64>,
    m: Vec<f64>,
}

impl PosteriorTriple {
    pub fn new(p_orig: Vec<f64>, p_aug1: Vec<f64>, p_aug2: Vec<f64>) -> Result<Self> {
        if p_orig.is_empty() || p_orig.len() != p_aug1.len() || p_orig.len() != p_aug2.len() {
            return Err(Error::DimensionMismatch(format!(
                "posterior lengths {}, {}, {}",
                p_orig.len(),
                p_aug1.len(),
                p_aug2.len()
            )));
        }
        check_distribution("p_orig", &p_orig)?;
        check_distribution("p_aug1", &p_aug1)?;
        check_distribution("p_aug2", &p_aug2)?;
        // Coinciding entries are copied so that equal posteriors give exactly zero.
        let m = (0..p_orig.len())
            .map(|i| {
                let (a, b, c) = (p_orig[i], p_aug1[i], p_aug2[i]);
                if a == b && b == c {
                    a
                } else {
                    (a + b + c) / 3.0
                }
            })
            .collect();
        Ok(PosteriorTriple {
            p_orig,
            p_aug1,
            p_aug2,
            m,
        })
    }

    /// Builds the triple from three logit rows.
    pub fn from_logits(orig: &[f64], aug1: &[f64], aug2: &[f64]) -> Result<Self> {
        if orig.iter().chain(aug1).chain(aug2).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("posterior logits".into()));
        }
        Self::new(softmax(orig), softmax(aug1), softmax(aug2))
    }

    pub fn p_orig(&self) -> &[f64] {
        &self.p_orig
    }

    pub fn p_aug1(&self) -> &[f64] {
        &self.p_aug1
    }

    pub fn p_aug2(&self) -> &[f64] {
        &self.p_aug2
    }

    pub fn mean(&self) -> &[f64] {
        &self.m
    }
}

/// Jensen-Shannon divergence of the triple, in `[0, ln 3]`.
pub fn consistent_id_loss(t: &PosteriorTriple) -> f64 {
    // The mean dominates each member's support, so the KL terms cannot fail.
    let kl = |p: &[f64]| -> f64 {
        p.iter()
            .zip(&t.m)
            .filter(|(a, _)| **a > 0.0)
            .map(|(&a, &b)| a * (a.max(LOG_EPS).ln() - b.max(LOG_EPS).ln()))
            .sum()
    };
    let js = (kl(&t.p_orig) + kl(&t.p_aug1) + kl(&t.p_aug2)) / 3.0;
    js.clamp(0.0, 3f64.ln())
}

/// `identity_loss + lambda * mean(consistent_id_loss)`; an empty triple list
/// contributes zero.
pub fn combined_objective(batch: &BatchLabels, triples: &[PosteriorTriple], lambda_cid: f64) -> Result<f64> {
    if !(lambda_cid >= 0.0 && lambda_cid.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda_cid {lambda_cid} must be a finite value >= 0"
        )));
    }
    let id = identity_loss(batch)?;
    if triples.is_empty() || lambda_cid == 0.0 {
        return Ok(id);
    }
    let cid = triples.iter().map(consistent_id_loss).sum::<f64>() / triples.len() as f64;
    Ok(id + lambda_cid * cid)
}
