//! Scoring and run comparison.

mod compare;
mod digest;
mod oversample;
mod svg;

pub use compare::{compare_runs, Comparison, ComparisonRow, RunMetrics};
pub use digest::{digest_dataset, digest_bytes};
pub use oversample::oversample;
pub use svg::{confusion_heatmap_svg, metrics_bar_chart_svg};

use serde::{Deserialize, Serialize};

use crate::class::{DiagnosticClass, N_CLASSES};
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes, both in
/// [`DiagnosticClass::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn column_total(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    /// Row-normalized percentages; empty rows stay zero.
    pub fn percentages(&self) -> [[f64; N_CLASSES]; N_CLASSES] {
        let mut out = [[0.0; N_CLASSES]; N_CLASSES];
        for (i, row) in self.counts.iter().enumerate() {
            let t = self.row_total(i);
            if t > 0 {
                for (j, &c) in row.iter().enumerate() {
                    out[i][j] = 100.0 * c as f64 / t as f64;
                }
            }
        }
        out
    }

    /// CSV with a header row and one row per true class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in DiagnosticClass::ALL {
            s.push(',');
            s.push_str(c.name());
        }
        s.push('\n');
        for (c, row) in DiagnosticClass::ALL.iter().zip(&self.counts) {
            s.push_str(c.name());
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut counts = [[0u64; N_CLASSES]; N_CLASSES];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= N_CLASSES || p >= N_CLASSES {
            return Err(Error::invalid(format!("label pair ({t}, {p}) out of range")));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: DiagnosticClass,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

impl Metrics {
    /// Mean recall over the given classes.
    pub fn mean_recall(&self, classes: &[DiagnosticClass]) -> f64 {
        if classes.is_empty() {
            return 0.0;
        }
        classes.iter().map(|c| self.per_class[c.index()].recall).sum::<f64>() / classes.len() as f64
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Accuracy, unweighted mean F1 and per-class precision/recall/F1, with
/// 0/0 taken as 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let per_class: Vec<ClassMetrics> = DiagnosticClass::ALL
        .iter()
        .map(|&class| {
            let i = class.index();
            let tp = cm.counts[i][i] as f64;
            let precision = ratio(tp, cm.column_total(i) as f64);
            let recall = ratio(tp, cm.row_total(i) as f64);
            ClassMetrics {
                class,
                support: cm.row_total(i),
                precision,
                recall,
                f1: ratio(2.0 * precision * recall, precision + recall),
            }
        })
        .collect();
    Ok(Metrics {
        accuracy: cm.trace() as f64 / total as f64,
        macro_f1: per_class.iter().map(|c| c.f1).sum::<f64>() / N_CLASSES as f64,
        per_class,
    })
}
