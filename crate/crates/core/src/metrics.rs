//! Multiclass evaluation: accuracy plus macro-averaged precision, recall, F1
//! and specificity. Any 0/0 ratio is defined as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub specificity_macro: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[t][p]` counts samples of true class `t` predicted as `p`.
    pub confusion: Vec<Vec<u64>>,
}

/// Named scalar from a report, for tables and plot series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Acc,
    Pre,
    Rec,
    F1,
    Spe,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Acc, Metric::Pre, Metric::Rec, Metric::F1, Metric::Spe];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Acc => "acc",
            Metric::Pre => "pre",
            Metric::Rec => "rec",
            Metric::F1 => "f1",
            Metric::Spe => "spe",
        }
    }
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Acc => self.acc,
            Metric::Pre => self.precision_macro,
            Metric::Rec => self.recall_macro,
            Metric::F1 => self.f1_macro,
            Metric::Spe => self.specificity_macro,
        }
    }
}

pub fn confusion_matrix(labels: &[usize], preds: &[usize], num_classes: usize) -> Result<Vec<Vec<u64>>> {
    if labels.len() != preds.len() {
        return Err(Error::shape("predictions", labels.len(), preds.len()));
    }
    if labels.is_empty() {
        return Err(Error::validation("labels", "empty input"));
    }
    let mut m = vec![vec![0u64; num_classes]; num_classes];
    for (&t, &p) in labels.iter().zip(preds) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::validation(
                "labels",
                format!("class ({t}, {p}) out of range for {num_classes} classes"),
            ));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn report(labels: &[usize], preds: &[usize], num_classes: usize) -> Result<MetricsReport> {
    let confusion = confusion_matrix(labels, preds, num_classes)?;
    let n = labels.len() as u64;
    let per_class: Vec<ClassMetrics> = (0..num_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let actual: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let fn_ = actual - tp;
            let fp = predicted - tp;
            let tn = n - tp - fn_ - fp;
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                specificity: ratio(tn, tn + fp),
            }
        })
        .collect();
    let macro_avg = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / num_classes as f64;
    let trace: u64 = (0..num_classes).map(|c| confusion[c][c]).sum();
    Ok(MetricsReport {
        acc: ratio(trace, n),
        precision_macro: macro_avg(|m| m.precision),
        recall_macro: macro_avg(|m| m.recall),
        f1_macro: macro_avg(|m| m.f1),
        specificity_macro: macro_avg(|m| m.specificity),
        per_class,
        confusion,
    })
}
