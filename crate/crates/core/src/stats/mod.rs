//! Evaluation statistics: classification metrics, chance-corrected
//! agreement with benchmark levels, and significance tests.

mod agreement;
mod metrics;
mod significance;
mod wilcoxon;

pub use agreement::{
    benchmark_level, gwet_ac1, gwet_ac1_counts, AgreementReport, BenchmarkLevel, BenchmarkResult, BENCHMARK_LEVELS,
};
pub use metrics::{confusion, metrics, ConfusionCounts, MetricsReport};
pub use significance::{
    cochran_q, dunn_holm, holm_adjust, CochranQ, PairwiseComparison, SignificanceReport, Stars,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("standard error must be positive")]
    ZeroStdErr,
    #[error("need at least two systems")]
    TooFewSystems,
    #[error("ragged prediction matrix")]
    Ragged,
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    Normal::standard().cdf(z)
}

/// Standard normal upper tail, `1 - Phi(z)` without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    normal_cdf(-z)
}

/// Chi-square upper tail probability.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .sf(x)
}
