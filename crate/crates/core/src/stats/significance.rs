//! Cochran's Q over matched binary outcomes, and pairwise Dunn comparisons
//! of within-item mean ranks with Holm's step-down correction.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{chi2_sf, normal_sf, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CochranQ {
    pub q: f64,
    pub df: usize,
    pub p: f64,
    /// Every row constant: the statistic is undefined and reported as 0.
    pub degenerate: bool,
}

fn shape(matrix: &[Vec<bool>]) -> Result<(usize, usize), StatsError> {
    let n = matrix.len();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let k = matrix[0].len();
    if k < 2 {
        return Err(StatsError::TooFewSystems);
    }
    if matrix.iter().any(|r| r.len() != k) {
        return Err(StatsError::Ragged);
    }
    Ok((n, k))
}

/// Cochran's Q for an `N x k` table of binary outcomes (rows = items,
/// columns = systems).
pub fn cochran_q(matrix: &[Vec<bool>]) -> Result<CochranQ, StatsError> {
    let (_, k) = shape(matrix)?;
    let kf = k as f64;
    let mut col = vec![0.0; k];
    let (mut row_sum, mut row_sq) = (0.0, 0.0);
    for row in matrix {
        let r = row.iter().filter(|&&x| x).count() as f64;
        row_sum += r;
        row_sq += r * r;
        for (c, &x) in col.iter_mut().zip(row) {
            if x {
                *c += 1.0;
            }
        }
    }
    let denom = kf * row_sum - row_sq;
    if denom == 0.0 {
        return Ok(CochranQ {
            q: 0.0,
            df: k - 1,
            p: 1.0,
            degenerate: true,
        });
    }
    let mean = row_sum / kf;
    let spread: f64 = col.iter().map(|c| (c - mean).powi(2)).sum();
    let q = kf * (kf - 1.0) * spread / denom;
    Ok(CochranQ {
        q,
        df: k - 1,
        p: chi2_sf(q, k - 1),
        degenerate: false,
    })
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (j, &i) in order.iter().enumerate() {
        let adj = ((m - j) as f64 * raw[i]).min(1.0);
        running = running.max(adj);
        out[i] = running;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "NS")]
    NotSignificant,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl Stars {
    /// `*` p < 0.05, `**` p < 0.01, `***` p < 0.001.
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Stars::Three
        } else if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::NotSignificant
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stars::NotSignificant => "NS",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub system_a: String,
    pub system_b: String,
    pub z: f64,
    pub raw_p: f64,
    pub holm_p: f64,
    pub stars: Stars,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub cochran: CochranQ,
    pub pairwise: Vec<PairwiseComparison>,
}

impl SignificanceReport {
    pub fn compute(matrix: &[Vec<bool>], labels: &[String]) -> Result<Self, StatsError> {
        Ok(Self {
            cochran: cochran_q(matrix)?,
            pairwise: dunn_holm(matrix, labels)?,
        })
    }
}

/// Mid-ranks (1-based) of one row, and the tie term `sum (t^3 - t)`.
fn mid_ranks(row: &[bool]) -> (Vec<f64>, f64) {
    let k = row.len();
    let ones = row.iter().filter(|&&x| x).count();
    let zeros = k - ones;
    let zero_rank = (zeros as f64 + 1.0) / 2.0;
    let one_rank = zeros as f64 + (ones as f64 + 1.0) / 2.0;
    let ties = [zeros, ones]
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum();
    (
        row.iter()
            .map(|&x| if x { one_rank } else { zero_rank })
            .collect(),
        ties,
    )
}

/// Dunn's pairwise test on within-item mean ranks with the tie correction
/// `1 - sum(t^3 - t) / (N (k^3 - k))`, Holm-adjusted over all `k(k-1)/2`
/// pairs. When every item is rated identically by all systems, each pair
/// gets z = 0 and p = 1.
pub fn dunn_holm(matrix: &[Vec<bool>], labels: &[String]) -> Result<Vec<PairwiseComparison>, StatsError> {
    let (n, k) = shape(matrix)?;
    if labels.len() != k {
        return Err(StatsError::LengthMismatch(labels.len(), k));
    }
    let mut rank_sum = vec![0.0; k];
    let mut ties = 0.0;
    for row in matrix {
        let (ranks, t) = mid_ranks(row);
        ties += t;
        for (s, r) in rank_sum.iter_mut().zip(ranks) {
            *s += r;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let mean_rank: Vec<f64> = rank_sum.iter().map(|s| s / nf).collect();
    let correction = 1.0 - ties / (nf * (kf * kf * kf - kf));
    let se = (kf * (kf + 1.0) / (6.0 * nf) * correction).sqrt();

    let mut pairs = Vec::new();
    let mut z_raw = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let (z, p) = if se > 1e-12 {
                let z = (mean_rank[a] - mean_rank[b]) / se;
                (z, (2.0 * normal_sf(z.abs())).min(1.0))
            } else {
                (0.0, 1.0)
            };
            pairs.push((a, b));
            z_raw.push((z, p));
        }
    }
    let raw: Vec<f64> = z_raw.iter().map(|x| x.1).collect();
    let holm = holm_adjust(&raw);
    Ok(pairs
        .into_iter()
        .zip(z_raw)
        .zip(holm)
        .map(|(((a, b), (z, raw_p)), holm_p)| PairwiseComparison {
            system_a: labels[a].clone(),
            system_b: labels[b].clone(),
            z,
            raw_p,
            holm_p,
            stars: Stars::from_p(holm_p),
        })
        .collect())
}
