//! Wilcoxon signed-rank test for paired samples (normal approximation).

use serde::{Deserialize, Serialize};

use super::{normal_sf, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences `x - y`.
    pub statistic: f64,
    pub z: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Signed-rank test of `x - y` with Pratt's zero handling: zero differences
/// take part in the ranking and are then dropped from the statistic, its mean
/// and its variance. Tied magnitudes share mid-ranks and the variance is
/// corrected for them. No continuity correction.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));

    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mid;
        }
        let t = (j - i + 1) as f64;
        if d[order[i]] != 0.0 {
            tie_term += t * t * t - t;
        }
        i = j + 1;
    }

    let nf = n as f64;
    let n_zero = d.iter().filter(|v| **v == 0.0).count() as f64;
    let statistic: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let mean = (nf * (nf + 1.0) - n_zero * (n_zero + 1.0)) / 4.0;
    let var = (nf * (nf + 1.0) * (2.0 * nf + 1.0) - n_zero * (n_zero + 1.0) * (2.0 * n_zero + 1.0)) / 24.0
        - tie_term / 48.0;
    if !(var > 0.0) {
        return Ok(WilcoxonResult { statistic, z: 0.0, p: 1.0 });
    }
    let z = (statistic - mean) / var.sqrt();
    Ok(WilcoxonResult {
        statistic,
        z,
        p: (2.0 * normal_sf(z.abs())).min(1.0),
    })
}
