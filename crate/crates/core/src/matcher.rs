//! Posteriorgram alignment and the accept/reject decision.
//!
//! The local cost between two frames is `-ln(p . q)`, floored at `eps` inside
//! the log. DTW runs over the full cost matrix with steps down, right and
//! diagonal from the first cell pair to the last, and the minimum accumulated
//! cost is divided by the number of cells on the chosen path, so distances
//! are per-frame averages comparable across utterance lengths.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_io::Label;
use crate::model::PosteriorgramSequence;
use crate::N_CLASSES;

pub const DEFAULT_EPS: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty posteriorgram sequence")]
    EmptySequence,
    #[error("no distances to combine")]
    EmptyList,
    #[error("template index {index} out of range for {len} templates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("template set for {0:?} is empty")]
    EmptyTemplateSet(String),
}

/// `-ln(max(p . q, eps))`.
pub fn local_cost(p: &[f64], q: &[f64], eps: f64) -> Result<f64, MatchError> {
    if p.len() != q.len() {
        return Err(MatchError::DimensionMismatch(p.len(), q.len()));
    }
    Ok(frame_cost(p, q, eps))
}

#[inline]
fn frame_cost(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let dot: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
    -(dot.clamp(eps, 1.0)).ln()
}

/// Full local-cost matrix, `h.len()` rows by `a.len()` columns.
pub fn cost_matrix(h: &PosteriorgramSequence, a: &PosteriorgramSequence, eps: f64) -> Vec<Vec<f64>> {
    h.frames
        .iter()
        .map(|p| a.frames.iter().map(|q| frame_cost(p, q, eps)).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwAlignment {
    /// Accumulated cost divided by `path_len`.
    pub distance: f64,
    pub accumulated: f64,
    pub path_len: usize,
}

/// DTW between a template `h` (n frames) and an attempt `a` (m frames).
/// Ties prefer the diagonal predecessor, then `(i-1, j)`.
pub fn dtw_distance(
    h: &PosteriorgramSequence,
    a: &PosteriorgramSequence,
) -> Result<DtwAlignment, MatchError> {
    dtw_with_eps(h, a, DEFAULT_EPS)
}

pub fn dtw_with_eps(
    h: &PosteriorgramSequence,
    a: &PosteriorgramSequence,
    eps: f64,
) -> Result<DtwAlignment, MatchError> {
    let (n, m) = (h.len(), a.len());
    if n == 0 || m == 0 {
        return Err(MatchError::EmptySequence);
    }
    // Two rolling rows of (accumulated cost, path length).
    let mut prev = vec![(0.0f64, 0usize); m];
    let mut cur = vec![(0.0f64, 0usize); m];
    for i in 0..n {
        let p = &h.frames[i];
        for j in 0..m {
            let c = frame_cost(p, &a.frames[j], eps);
            let best = match (i, j) {
                (0, 0) => (0.0, 0),
                (0, _) => cur[j - 1],
                (_, 0) => prev[j],
                _ => {
                    let diag = prev[j - 1];
                    let up = prev[j];
                    let left = cur[j - 1];
                    let mut best = diag;
                    if up.0 < best.0 {
                        best = up;
                    }
                    if left.0 < best.0 {
                        best = left;
                    }
                    best
                }
            };
            cur[j] = (best.0 + c, best.1 + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (accumulated, path_len) = prev[m - 1];
    Ok(DtwAlignment {
        distance: accumulated / path_len as f64,
        accumulated,
        path_len,
    })
}

/// How per-template distances collapse into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    #[default]
    Min,
    Max,
    Mean,
    /// Distance to one template only.
    Single(usize),
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Combiner::Min => f.write_str("min"),
            Combiner::Max => f.write_str("max"),
            Combiner::Mean => f.write_str("mean"),
            Combiner::Single(k) => write!(f, "single:{k}"),
        }
    }
}

impl FromStr for Combiner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Combiner::Min),
            "max" => Ok(Combiner::Max),
            "mean" => Ok(Combiner::Mean),
            other => other
                .strip_prefix("single:")
                .and_then(|k| k.parse().ok())
                .map(Combiner::Single)
                .ok_or_else(|| format!("unknown combiner {other:?}; use min, max, mean or single:<k>")),
        }
    }
}

pub fn combine(distances: &[f64], combiner: Combiner) -> Result<f64, MatchError> {
    if distances.is_empty() {
        return Err(MatchError::EmptyList);
    }
    Ok(match combiner {
        Combiner::Min => distances.iter().cloned().fold(f64::INFINITY, f64::min),
        Combiner::Max => distances.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Combiner::Mean => distances.iter().sum::<f64>() / distances.len() as f64,
        Combiner::Single(k) => *distances.get(k).ok_or(MatchError::IndexOutOfRange {
            index: k,
            len: distances.len(),
        })?,
    })
}

/// Healthy-speaker templates for one target word.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    pub word: String,
    pub templates: Vec<PosteriorgramSequence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub word: String,
    pub per_template_distance: Vec<f64>,
    pub combined_distance: f64,
    pub combiner: Combiner,
    pub threshold: f64,
    pub verdict: Label,
}

/// Accepts the attempt iff the combined distance is strictly below
/// `threshold`.
pub fn verify(
    attempt: &PosteriorgramSequence,
    templates: &TemplateSet,
    threshold: f64,
    combiner: Combiner,
) -> Result<VerificationResult, MatchError> {
    if !(threshold > 0.0) {
        return Err(MatchError::InvalidThreshold(threshold));
    }
    let (per_template_distance, combined_distance) = score(attempt, templates, combiner)?;
    Ok(VerificationResult {
        word: templates.word.clone(),
        per_template_distance,
        combined_distance,
        combiner,
        threshold,
        verdict: decide(combined_distance, threshold),
    })
}

/// Per-template DTW distances and their combination, without a decision.
pub fn score(
    attempt: &PosteriorgramSequence,
    templates: &TemplateSet,
    combiner: Combiner,
) -> Result<(Vec<f64>, f64), MatchError> {
    if templates.templates.is_empty() {
        return Err(MatchError::EmptyTemplateSet(templates.word.clone()));
    }
    debug_assert!(attempt.frames.first().is_none_or(|r| r.len() == N_CLASSES));
    let distances = templates
        .templates
        .iter()
        .map(|t| dtw_distance(t, attempt).map(|d| d.distance))
        .collect::<Result<Vec<_>, _>>()?;
    let combined = combine(&distances, combiner)?;
    Ok((distances, combined))
}

pub fn decide(distance: f64, threshold: f64) -> Label {
    Label::from_bool(distance < threshold)
}
