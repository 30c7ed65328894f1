//! Pixel-level evaluation against ground truth, foreground = positive.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SegError};
use crate::model::{Label, LabelMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(predicted: &LabelMask, truth: &LabelMask) -> Result<Confusion> {
    if predicted.width() != truth.width() || predicted.height() != truth.height() {
        return Err(SegError::mismatch(
            format!("{}x{}", truth.width(), truth.height()),
            format!("{}x{}", predicted.width(), predicted.height()),
        ));
    }
    let mut c = Confusion::default();
    for (&p, &t) in predicted.labels().iter().zip(truth.labels()) {
        match (p, t) {
            (Label::Foreground, Label::Foreground) => c.tp += 1,
            (Label::Foreground, Label::Background) => c.fp += 1,
            (Label::Background, Label::Foreground) => c.fn_ += 1,
            (Label::Background, Label::Background) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `(precision, recall, f1)`.
///
/// An empty denominator counts as perfect (precision with no predicted
/// positives, recall with no true positives to find); F1 is 0 when both
/// precision and recall are 0.
pub fn precision_recall_f1(tp: u64, fp: u64, fn_: u64) -> (f64, f64, f64) {
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        1.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if tp + fp > 0 && tp + fn_ > 0 {
        // Same value as the harmonic mean, without its rounding.
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    } else {
        f1_score(precision, recall)
    };
    (precision, recall, f1)
}

/// Harmonic mean of precision and recall.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub counts: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricsReport {
    pub fn from_counts(counts: Confusion) -> Self {
        let (precision, recall, f1) = precision_recall_f1(counts.tp, counts.fp, counts.fn_);
        Self {
            counts,
            precision,
            recall,
            f1,
        }
    }

    pub fn evaluate(predicted: &LabelMask, truth: &LabelMask) -> Result<Self> {
        confusion(predicted, truth).map(Self::from_counts)
    }

    /// `Precision  Recall  F1` as percentages with one decimal.
    pub fn percent_row(&self) -> String {
        format!(
            "{:.1}%\t{:.1}%\t{:.1}%",
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    /// Unweighted mean of per-image scores.
    #[default]
    Macro,
    /// Scores of the pooled pixel counts.
    Micro,
}

/// Combines per-image reports. Counts are always summed.
pub fn aggregate(reports: &[MetricsReport], mode: AverageMode) -> Result<MetricsReport> {
    if reports.is_empty() {
        return Err(SegError::Empty("no reports to aggregate".into()));
    }
    let counts = reports.iter().fold(Confusion::default(), |a, r| Confusion {
        tp: a.tp + r.counts.tp,
        fp: a.fp + r.counts.fp,
        fn_: a.fn_ + r.counts.fn_,
        tn: a.tn + r.counts.tn,
    });
    Ok(match mode {
        AverageMode::Micro => MetricsReport::from_counts(counts),
        AverageMode::Macro => {
            let n = reports.len() as f64;
            let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
            MetricsReport {
                counts,
                precision: mean(|r| r.precision),
                recall: mean(|r| r.recall),
                f1: mean(|r| r.f1),
            }
        }
    })
}
