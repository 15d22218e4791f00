use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::corpus_io::Label;

/// 2x2 confusion counts with 'correct' as the positive class: a false
/// positive is a truly incorrect attempt accepted as correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, truth: Label, pred: Label) {
        match (truth, pred) {
            (Label::Correct, Label::Correct) => self.tp += 1,
            (Label::Incorrect, Label::Correct) => self.fp += 1,
            (Label::Correct, Label::Incorrect) => self.fn_ += 1,
            (Label::Incorrect, Label::Incorrect) => self.tn += 1,
        }
    }
}

pub fn confusion(truth: &[Label], pred: &[Label]) -> Result<ConfusionCounts, StatsError> {
    if truth.len() != pred.len() {
        return Err(StatsError::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in truth.iter().zip(pred) {
        c.add(t, p);
    }
    Ok(c)
}

/// Accuracy, false positive / false negative rates (over all attempts), F1
/// and Pearson's r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub f1: f64,
    pub pearson_r: f64,
}

/// Metrics of a confusion table. F1 is 0 when it has no true or predicted
/// positives; Pearson's r (phi) is 0 when any marginal is empty.
pub fn metrics(c: &ConfusionCounts) -> MetricsReport {
    let n = c.n().max(1) as f64;
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let f1_den = 2.0 * tp + fp + fn_;
    let marginals = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    MetricsReport {
        accuracy: (tp + tn) / n,
        fp_rate: fp / n,
        fn_rate: fn_ / n,
        f1: if f1_den > 0.0 { 2.0 * tp / f1_den } else { 0.0 },
        pearson_r: if marginals > 0.0 {
            (tp * tn - fp * fn_) / marginals.sqrt()
        } else {
            0.0
        },
    }
}
