//! Confusion-matrix metrics, ROC curves and AUC.

use serde::{Deserialize, Serialize};

use super::{Classifier, ExampleSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&self, other: &Confusion) -> Confusion {
        Confusion {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }

    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            100.0 * num as f64 / den as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        Self::ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// One ROC operating point: predicting drowsy for `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Accuracy, precision, recall and f1 are percentages; AUC is in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub threshold: f64,
    pub confusion: Confusion,
    pub roc: Vec<RocPoint>,
}

/// ROC by sweeping every distinct score from high to low. The first point
/// uses a threshold above every score and sits at (0, 0). When one class is
/// absent the curve is the chance diagonal.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Vec<RocPoint> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = if top.is_finite() { top + 1.0 } else { 1.0 };
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: start,
    }];
    if pos == 0 || neg == 0 {
        let low = scores.iter().copied().fold(f64::INFINITY, f64::min);
        points.push(RocPoint {
            fpr: 1.0,
            tpr: 1.0,
            threshold: if low.is_finite() { low } else { 0.0 },
        });
        return points;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: s,
        });
    }
    points
}

/// Trapezoidal area under ROC points ordered by increasing fpr.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

pub fn confusion_at(scores: &[f64], labels: &[bool], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

pub fn evaluate_scores(scores: &[f64], labels: &[bool], threshold: f64) -> EvalMetrics {
    let confusion = confusion_at(scores, labels, threshold);
    let roc = roc_curve(scores, labels);
    let single_class = labels.iter().all(|&l| l) || labels.iter().all(|&l| !l);
    EvalMetrics {
        accuracy: confusion.accuracy(),
        precision: confusion.precision(),
        recall: confusion.recall(),
        f1: confusion.f1(),
        auc: if single_class { 0.5 } else { auc(&roc) },
        threshold,
        confusion,
        roc,
    }
}

/// Scores `examples` and computes metrics at `threshold`, or at the model's
/// default cutoff when `None`.
pub fn evaluate(classifier: &Classifier, examples: &ExampleSet, threshold: Option<f64>) -> Result<EvalMetrics> {
    if examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scores = classifier.score_set(examples)?;
    let t = threshold.unwrap_or_else(|| classifier.kind().default_threshold());
    Ok(evaluate_scores(&scores, &examples.labels, t))
}
