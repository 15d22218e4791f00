//! Gwet's AC1 for two raters and two categories, and benchmarking of the
//! coefficient against interval ranges with 95% certainty.

use serde::{Deserialize, Serialize};

use super::{normal_cdf, StatsError};
use crate::corpus_io::Label;

/// One agreement level `(lower, upper]`. Infinite bounds close the scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkLevel {
    pub code: u8,
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
}

/// Health-care benchmark scale, highest level first. The published ranges
/// leave hundredth-wide gaps (.59/.60, .39/.40, .20/.21); here each level
/// runs up to the lower bound of the next.
pub const BENCHMARK_LEVELS: [BenchmarkLevel; 6] = [
    BenchmarkLevel { code: 6, name: "Almost Perfect", lower: 0.90, upper: f64::INFINITY },
    BenchmarkLevel { code: 5, name: "Strong", lower: 0.80, upper: 0.90 },
    BenchmarkLevel { code: 4, name: "Moderate", lower: 0.60, upper: 0.80 },
    BenchmarkLevel { code: 3, name: "Weak", lower: 0.40, upper: 0.60 },
    BenchmarkLevel { code: 2, name: "Minimal", lower: 0.20, upper: 0.40 },
    BenchmarkLevel { code: 1, name: "None", lower: f64::NEG_INFINITY, upper: 0.20 },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub level_code: u8,
    pub level_name: String,
    /// Interval membership probability per level, highest level first.
    pub membership: Vec<f64>,
    /// Running sum of `membership` from the highest level down.
    pub cumulative: Vec<f64>,
}

/// Interval membership probabilities of `N(ac1, se^2)` over `levels`
/// (highest first); the result is the first level whose cumulative
/// probability reaches 0.95.
pub fn benchmark_level(
    ac1: f64,
    std_err: f64,
    levels: &[BenchmarkLevel],
) -> Result<BenchmarkResult, StatsError> {
    if !(std_err > 0.0) {
        return Err(StatsError::ZeroStdErr);
    }
    if levels.is_empty() {
        return Err(StatsError::Empty);
    }
    let membership: Vec<f64> = levels
        .iter()
        .map(|l| {
            let hi = normal_cdf((ac1 - l.lower) / std_err);
            let lo = normal_cdf((ac1 - l.upper) / std_err);
            (hi - lo).max(0.0)
        })
        .collect();
    let cumulative: Vec<f64> = membership
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m;
            Some(*acc)
        })
        .collect();
    let idx = cumulative
        .iter()
        .position(|&c| c >= 0.95)
        .unwrap_or(levels.len() - 1);
    Ok(BenchmarkResult {
        level_code: levels[idx].code,
        level_name: levels[idx].name.to_string(),
        membership,
        cumulative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: usize,
    /// Fraction of identical ratings.
    pub pa: f64,
    pub ac1: f64,
    pub std_err: f64,
    pub ci95: (f64, f64),
    pub level_code: u8,
    pub level_name: String,
    pub membership: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// AC1 between two raters' binary ratings of the same items.
pub fn gwet_ac1(ratings_a: &[Label], ratings_b: &[Label]) -> Result<AgreementReport, StatsError> {
    if ratings_a.len() != ratings_b.len() {
        return Err(StatsError::LengthMismatch(ratings_a.len(), ratings_b.len()));
    }
    if ratings_a.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut counts = [[0u64; 2]; 2];
    for (&a, &b) in ratings_a.iter().zip(ratings_b) {
        counts[usize::from(!a.is_correct())][usize::from(!b.is_correct())] += 1;
    }
    Ok(gwet_ac1_counts(counts))
}

/// AC1 from a 2x2 table `counts[a][b]`, index 0 = correct, 1 = incorrect.
///
/// With `pi_k` the mean of both raters' marginals for category `k`:
/// `pe = sum_k pi_k (1 - pi_k)` and `ac1 = (pa - pe) / (1 - pe)`. The
/// variance is Gwet's two-rater estimator with no finite-population
/// correction:
///
/// ```text
/// v = [ pa(1-pa)
///       - 4(1-ac1) (sum_k p_kk (1-pi_k) - pa pe)
///       + 4(1-ac1)^2 (sum_kl p_kl (1 - (pi_k+pi_l)/2)^2 - pe^2) ] / (n (1-pe)^2)
/// ```
pub fn gwet_ac1_counts(counts: [[u64; 2]; 2]) -> AgreementReport {
    let n_items: u64 = counts.iter().flatten().sum();
    let n = n_items as f64;
    let p = [
        [counts[0][0] as f64 / n, counts[0][1] as f64 / n],
        [counts[1][0] as f64 / n, counts[1][1] as f64 / n],
    ];
    let pa = p[0][0] + p[1][1];
    let pi = [
        (p[0][0] + p[0][1] + p[0][0] + p[1][0]) / 2.0,
        (p[1][0] + p[1][1] + p[0][1] + p[1][1]) / 2.0,
    ];
    let pe: f64 = pi.iter().map(|x| x * (1.0 - x)).sum();
    let ac1 = if pa == 1.0 { 1.0 } else { (pa - pe) / (1.0 - pe) };

    let diag: f64 = (0..2).map(|k| p[k][k] * (1.0 - pi[k])).sum();
    let mut cross = 0.0;
    for k in 0..2 {
        for l in 0..2 {
            cross += p[k][l] * (1.0 - (pi[k] + pi[l]) / 2.0).powi(2);
        }
    }
    let var = (pa * (1.0 - pa) - 4.0 * (1.0 - ac1) * (diag - pa * pe)
        + 4.0 * (1.0 - ac1).powi(2) * (cross - pe * pe))
        / (n * (1.0 - pe).powi(2));
    let std_err = var.max(0.0).sqrt();

    let bench = if std_err > 0.0 {
        benchmark_level(ac1, std_err, &BENCHMARK_LEVELS).expect("positive standard error")
    } else {
        // A point mass: the level containing the coefficient gets
        // probability one (perfect agreement lands in the top level).
        let idx = BENCHMARK_LEVELS
            .iter()
            .position(|l| ac1 > l.lower && ac1 <= l.upper)
            .unwrap_or(0);
        let membership: Vec<f64> = (0..BENCHMARK_LEVELS.len())
            .map(|i| if i == idx { 1.0 } else { 0.0 })
            .collect();
        let cumulative = (0..BENCHMARK_LEVELS.len())
            .map(|i| if i >= idx { 1.0 } else { 0.0 })
            .collect();
        BenchmarkResult {
            level_code: BENCHMARK_LEVELS[idx].code,
            level_name: BENCHMARK_LEVELS[idx].name.to_string(),
            membership,
            cumulative,
        }
    };

    AgreementReport {
        n: n_items as usize,
        pa,
        ac1,
        std_err,
        ci95: (ac1 - 1.96 * std_err, ac1 + 1.96 * std_err),
        level_code: bench.level_code,
        level_name: bench.level_name,
        membership: bench.membership,
        cumulative: bench.cumulative,
    }
}
