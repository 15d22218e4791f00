//! Threshold calibration, ROC analysis and k-fold cross-validation over
//! scored attempts.
//!
//! Calibration maximises Pearson's r (the phi coefficient) between the
//! thresholded verdicts and the ground truth. The sweep visits the midpoint
//! between every pair of consecutive distinct distances plus one point below
//! the smallest and one above the largest, so every achievable confusion
//! table is evaluated exactly once.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_io::Label;
use crate::stats::{confusion, metrics, ConfusionCounts, MetricsReport};

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("no scored attempts")]
    EmptyAttempts,
    #[error("threshold grid must be non-empty and strictly increasing")]
    InvalidGrid,
    #[error("no calibration data for patient {0:?}")]
    MissingPatientData(String),
    #[error("ROC needs both classes present")]
    SingleClass,
    #[error("{attempts} attempts cannot fill {folds} folds (need k >= 2 and attempts >= k)")]
    TooFewAttempts { attempts: usize, folds: usize },
    #[error("negative or non-finite distance {0}")]
    InvalidDistance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAttempt {
    pub patient_id: String,
    pub word: String,
    /// Combined DTW distance.
    pub distance: f64,
    pub truth: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// One threshold for every patient.
    Fixed,
    /// One threshold per patient.
    Adapted,
}

impl std::fmt::Display for CalibrationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CalibrationMode::Fixed => "fixed",
            CalibrationMode::Adapted => "adapted",
        })
    }
}

impl std::str::FromStr for CalibrationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(CalibrationMode::Fixed),
            "adapted" => Ok(CalibrationMode::Adapted),
            other => Err(format!("unknown mode {other:?}; use fixed or adapted")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub pearson_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub mode: CalibrationMode,
    pub thresholds: BTreeMap<String, f64>,
    /// Pearson's r of the calibrated verdicts over all supplied attempts.
    pub objective_value: f64,
    /// Sweep over the pooled attempts.
    pub sweep: Vec<SweepPoint>,
    /// Per-patient sweeps (adapted mode only).
    pub patient_sweeps: BTreeMap<String, Vec<SweepPoint>>,
    /// Calibrated on the same data it is reported on.
    pub in_sample: bool,
}

impl CalibrationResult {
    pub fn threshold_for(&self, patient_id: &str) -> Result<f64, CalibrationError> {
        self.thresholds
            .get(patient_id)
            .copied()
            .ok_or_else(|| CalibrationError::MissingPatientData(patient_id.to_string()))
    }
}

fn check(attempts: &[ScoredAttempt]) -> Result<(), CalibrationError> {
    if attempts.is_empty() {
        return Err(CalibrationError::EmptyAttempts);
    }
    if let Some(a) = attempts.iter().find(|a| !(a.distance >= 0.0) || !a.distance.is_finite()) {
        return Err(CalibrationError::InvalidDistance(a.distance));
    }
    Ok(())
}

fn counts_at(attempts: &[ScoredAttempt], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for a in attempts {
        c.add(a.truth, Label::from_bool(a.distance < threshold));
    }
    c
}

/// Midpoints between consecutive distinct distances, plus half the minimum
/// (or 0 when the minimum is 0) and the maximum plus one.
pub fn threshold_grid(attempts: &[ScoredAttempt]) -> Vec<f64> {
    let mut d: Vec<f64> = attempts.iter().map(|a| a.distance).collect();
    d.sort_by(f64::total_cmp);
    d.dedup();
    if d.is_empty() {
        return Vec::new();
    }
    let mut grid = Vec::with_capacity(d.len() + 1);
    grid.push(d[0] / 2.0);
    grid.extend(d.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    grid.push(d[d.len() - 1] + 1.0);
    grid
}

/// Pearson's r at every grid threshold; undefined r counts as 0.
pub fn sweep_thresholds(
    attempts: &[ScoredAttempt],
    grid: &[f64],
) -> Result<Vec<SweepPoint>, CalibrationError> {
    check(attempts)?;
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CalibrationError::InvalidGrid);
    }
    Ok(grid
        .iter()
        .map(|&t| SweepPoint {
            threshold: t,
            pearson_r: metrics(&counts_at(attempts, t)).pearson_r,
        })
        .collect())
}

/// Highest r; ties go to the smallest threshold.
fn best(sweep: &[SweepPoint]) -> SweepPoint {
    let mut best = sweep[0];
    for p in &sweep[1..] {
        if p.pearson_r > best.pearson_r {
            best = *p;
        }
    }
    best
}

fn optimise(attempts: &[ScoredAttempt]) -> Result<(SweepPoint, Vec<SweepPoint>), CalibrationError> {
    let sweep = sweep_thresholds(attempts, &threshold_grid(attempts))?;
    Ok((best(&sweep), sweep))
}

/// Attempts grouped by patient, patients in sorted order.
fn by_patient(attempts: &[ScoredAttempt]) -> BTreeMap<String, Vec<ScoredAttempt>> {
    let mut groups: BTreeMap<String, Vec<ScoredAttempt>> = BTreeMap::new();
    for a in attempts {
        groups.entry(a.patient_id.clone()).or_default().push(a.clone());
    }
    groups
}

pub fn calibrate(
    attempts: &[ScoredAttempt],
    mode: CalibrationMode,
) -> Result<CalibrationResult, CalibrationError> {
    check(attempts)?;
    let groups = by_patient(attempts);
    let (pooled_best, sweep) = optimise(attempts)?;
    let mut thresholds = BTreeMap::new();
    let mut patient_sweeps = BTreeMap::new();
    match mode {
        CalibrationMode::Fixed => {
            for patient in groups.keys() {
                thresholds.insert(patient.clone(), pooled_best.threshold);
            }
        }
        CalibrationMode::Adapted => {
            for (patient, group) in &groups {
                let (b, s) = optimise(group)?;
                thresholds.insert(patient.clone(), b.threshold);
                patient_sweeps.insert(patient.clone(), s);
            }
        }
    }
    let mut pooled = ConfusionCounts::default();
    for a in attempts {
        let t = thresholds[&a.patient_id];
        pooled.add(a.truth, Label::from_bool(a.distance < t));
    }
    Ok(CalibrationResult {
        mode,
        thresholds,
        objective_value: metrics(&pooled).pearson_r,
        sweep,
        patient_sweeps,
        in_sample: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)`, by ascending threshold.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC with 'correct' as the positive class and smaller distance meaning
/// more likely correct. Thresholds are the distinct distances (accept when
/// `distance <= t`), preceded by the reject-all point.
pub fn roc(attempts: &[ScoredAttempt]) -> Result<RocCurve, CalibrationError> {
    check(attempts)?;
    let pos = attempts.iter().filter(|a| a.truth.is_correct()).count();
    let neg = attempts.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(CalibrationError::SingleClass);
    }
    let mut sorted: Vec<&ScoredAttempt> = attempts.iter().collect();
    sorted.sort_by(|a, b| a.distance.total_cmp(&b.distance));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let d = sorted[i].distance;
        while i < sorted.len() && sorted[i].distance == d {
            if sorted[i].truth.is_correct() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Summary {
            mean,
            sd,
            min,
            max,
            range: max - min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub threshold: f64,
    pub test_size: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummaries {
    pub accuracy: Summary,
    pub fp_rate: Summary,
    pub fn_rate: Summary,
    pub f1: Summary,
    pub pearson_r: Summary,
}

impl MetricSummaries {
    pub fn of(reports: &[MetricsReport]) -> Self {
        let col = |f: fn(&MetricsReport) -> f64| Summary::of(&reports.iter().map(f).collect::<Vec<_>>());
        Self {
            accuracy: col(|m| m.accuracy),
            fp_rate: col(|m| m.fp_rate),
            fn_rate: col(|m| m.fn_rate),
            f1: col(|m| m.f1),
            pearson_r: col(|m| m.pearson_r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    /// Attempt indices (into the input slice) of every fold's test set.
    pub partition: Vec<Vec<usize>>,
    pub summary: MetricSummaries,
    pub seed: u64,
    pub stratified: bool,
}

/// Seeded shuffle, then `k` contiguous near-equal folds (the first `n % k`
/// folds get one extra attempt). With `stratified`, each class is shuffled
/// separately and dealt round-robin so class proportions match across folds.
pub fn fold_partition(truths: &[Label], k: usize, seed: u64, stratified: bool) -> Vec<Vec<usize>> {
    let n = truths.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if stratified {
        let mut folds = vec![Vec::new(); k];
        let mut slot = 0;
        for class in [Label::Correct, Label::Incorrect] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| truths[i] == class).collect();
            idx.shuffle(&mut rng);
            for i in idx {
                folds[slot % k].push(i);
                slot += 1;
            }
        }
        return folds;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// k-fold cross-validation of per-patient threshold calibration. Each fold's
/// threshold is fitted on the other `k - 1` folds and evaluated on the held
/// out fold.
pub fn cross_validate(
    attempts: &[ScoredAttempt],
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<CrossValidation, CalibrationError> {
    check(attempts)?;
    if k < 2 || attempts.len() < k {
        return Err(CalibrationError::TooFewAttempts {
            attempts: attempts.len(),
            folds: k,
        });
    }
    let truths: Vec<Label> = attempts.iter().map(|a| a.truth).collect();
    let partition = fold_partition(&truths, k, seed, stratified);
    let mut folds = Vec::with_capacity(k);
    for (f, test) in partition.iter().enumerate() {
        let mut in_test = vec![false; attempts.len()];
        for &i in test {
            in_test[i] = true;
        }
        let train: Vec<ScoredAttempt> = attempts
            .iter()
            .zip(&in_test)
            .filter(|(_, &t)| !t)
            .map(|(a, _)| a.clone())
            .collect();
        let (b, _) = optimise(&train)?;
        let held: Vec<&ScoredAttempt> = test.iter().map(|&i| &attempts[i]).collect();
        let truth: Vec<Label> = held.iter().map(|a| a.truth).collect();
        let pred: Vec<Label> = held
            .iter()
            .map(|a| Label::from_bool(a.distance < b.threshold))
            .collect();
        let counts = confusion(&truth, &pred).expect("fold is non-empty and aligned");
        folds.push(FoldResult {
            fold: f + 1,
            threshold: b.threshold,
            test_size: held.len(),
            metrics: metrics(&counts),
        });
    }
    let reports: Vec<MetricsReport> = folds.iter().map(|f| f.metrics).collect();
    Ok(CrossValidation {
        summary: MetricSummaries::of(&reports),
        folds,
        partition,
        seed,
        stratified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sa(patient: &str, distance: f64, correct: bool) -> ScoredAttempt {
        ScoredAttempt {
            patient_id: patient.into(),
            word: format!("w{distance}"),
            distance,
            truth: Label::from_bool(correct),
        }
    }

    fn separable(patient: &str, n: usize, cut: f64) -> Vec<ScoredAttempt> {
        (0..n)
            .map(|i| {
                let correct = i % 2 == 0;
                let d = if correct {
                    cut - 0.1 - 0.001 * i as f64
                } else {
                    cut + 0.1 + 0.001 * i as f64
                };
                sa(patient, d, correct)
            })
            .collect()
    }

    #[test]
    fn grid_construction() {
        let a = vec![sa("p", 0.4, true), sa("p", 0.2, true), sa("p", 0.4, false), sa("p", 0.8, false)];
        let g = threshold_grid(&a);
        let expect = [0.1, 0.30000000000000004, 0.6000000000000001, 1.8];
        assert_eq!(g.len(), 4);
        for (x, y) in g.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_separation_gives_r_one() {
        let a = separable("p", 20, 0.7);
        let sweep = sweep_thresholds(&a, &[0.7]).unwrap();
        assert!((sweep[0].pearson_r - 1.0).abs() < 1e-12);
        let low = sweep_thresholds(&a, &[0.01]).unwrap();
        assert_eq!(low[0].pearson_r, 0.0);
    }

    #[test]
    fn sweep_matches_phi_oracle() {
        // distances / truths with a known confusion at t = 0.5:
        // predicted correct: 0.1(T) 0.2(T) 0.3(F) 0.4(T); predicted incorrect: 0.6(F) 0.7(T) 0.8(F) 0.9(F) 1.0(F)
        let a = vec![
            sa("p", 0.1, true),
            sa("p", 0.2, true),
            sa("p", 0.3, false),
            sa("p", 0.4, true),
            sa("p", 0.6, false),
            sa("p", 0.7, true),
            sa("p", 0.8, false),
            sa("p", 0.9, false),
            sa("p", 1.0, false),
        ];
        let (tp, fp, fn_, tn) = (3.0f64, 1.0f64, 1.0f64, 4.0f64);
        let phi = (tp * tn - fp * fn_) / ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        let r = sweep_thresholds(&a, &[0.5]).unwrap()[0].pearson_r;
        assert!((r - phi).abs() < 1e-12);
        assert!((r - 0.55).abs() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        let a = separable("p", 4, 0.5);
        assert_eq!(sweep_thresholds(&a, &[]), Err(CalibrationError::InvalidGrid));
        assert_eq!(sweep_thresholds(&a, &[0.5, 0.5]), Err(CalibrationError::InvalidGrid));
        assert_eq!(sweep_thresholds(&[], &[0.5]), Err(CalibrationError::EmptyAttempts));
    }

    #[test]
    fn fixed_and_adapted_differ_per_patient() {
        let mut a = separable("P1", 60, 0.9);
        a.extend(separable("P4", 40, 0.3));
        let fixed = calibrate(&a, CalibrationMode::Fixed).unwrap();
        let adapted = calibrate(&a, CalibrationMode::Adapted).unwrap();
        let vals: Vec<f64> = fixed.thresholds.values().cloned().collect();
        assert!(vals.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(adapted.threshold_for("P1").unwrap(), adapted.threshold_for("P4").unwrap());
        assert_ne!(fixed.threshold_for("P4").unwrap(), adapted.threshold_for("P4").unwrap());
        assert!((adapted.objective_value - 1.0).abs() < 1e-12);
        assert!(matches!(
            adapted.threshold_for("P9"),
            Err(CalibrationError::MissingPatientData(_))
        ));
    }

    #[test]
    fn single_patient_modes_coincide() {
        let a = separable("P1", 30, 0.6);
        let f = calibrate(&a, CalibrationMode::Fixed).unwrap();
        let d = calibrate(&a, CalibrationMode::Adapted).unwrap();
        assert_eq!(f.thresholds, d.thresholds);
    }

    #[test]
    fn identical_distances_are_degenerate() {
        let a: Vec<_> = (0..6).map(|i| sa("p", 0.5, i % 2 == 0)).collect();
        let c = calibrate(&a, CalibrationMode::Fixed).unwrap();
        assert_eq!(c.thresholds["p"], 0.25);
        assert_eq!(c.objective_value, 0.0);
        assert!(c.sweep.iter().all(|p| p.pearson_r == 0.0));
    }

    #[test]
    fn roc_perfect_and_single_class() {
        let a = separable("p", 10, 0.5);
        let r = roc(&a).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        let one: Vec<_> = (0..4).map(|i| sa("p", i as f64, true)).collect();
        assert_eq!(roc(&one), Err(CalibrationError::SingleClass));
    }

    #[test]
    fn roc_ties_form_diagonal() {
        let a = vec![sa("p", 0.5, true), sa("p", 0.5, false)];
        let r = roc(&a).unwrap();
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!((r.auc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn folds_of_22() {
        let truths = vec![Label::Correct; 220];
        let folds = fold_partition(&truths, 10, 1, false);
        assert!(folds.iter().all(|f| f.len() == 22));
        let folds = fold_partition(&truths[..23], 10, 1, false);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let truths: Vec<Label> = (0..100).map(|i| Label::from_bool(i < 30)).collect();
        let folds = fold_partition(&truths, 10, 5, true);
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| truths[i].is_correct()).count(), 3);
            assert_eq!(f.len(), 10);
        }
    }

    #[test]
    fn cv_on_separable_patient() {
        let a = separable("P1", 220, 0.6);
        let cv = cross_validate(&a, 10, 3, false).unwrap();
        assert_eq!(cv.folds.len(), 10);
        assert!(cv.folds.iter().all(|f| f.test_size == 22 && f.metrics.accuracy == 1.0));
        assert_eq!(cv.summary.accuracy.mean, 1.0);
        assert_eq!(cv.summary.accuracy.sd, 0.0);
        assert!(matches!(
            cross_validate(&a[..5], 10, 3, false),
            Err(CalibrationError::TooFewAttempts { .. })
        ));
        assert!(matches!(
            cross_validate(&a, 1, 3, false),
            Err(CalibrationError::TooFewAttempts { .. })
        ));
    }

    #[test]
    fn summary_arithmetic() {
        let s = Summary::of(&[0.8, 0.9, 1.0, 0.7]);
        // mean 0.85, squared deviations 0.0025+0.0025+0.0225+0.0225 = 0.05, / 3
        assert!((s.mean - 0.85).abs() < 1e-12);
        assert!((s.sd - (0.05f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.max), (0.7, 1.0));
        assert!((s.range - 0.3).abs() < 1e-12);
        assert_eq!(Summary::of(&[0.4]).sd, 0.0);
    }
}
