use serde::{Deserialize, Serialize};

use super::{ClassMetrics, ConfusionMatrix, Metrics};
use crate::class::{DiagnosticClass, N_CLASSES};
use crate::error::{Error, Result};

/// Everything a finished run reports; serialized as the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_id: String,
    pub strategy: String,
    pub seed: u64,
    pub config_digest: String,
    pub test_digest: String,
    pub train_class_counts: Vec<usize>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
}

impl RunMetrics {
    pub fn metrics(&self) -> Metrics {
        Metrics { accuracy: self.accuracy, macro_f1: self.macro_f1, per_class: self.per_class.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub run_id: String,
    pub strategy: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub recall: Vec<f64>,
    /// Differences against the first run.
    pub delta_accuracy: f64,
    pub delta_macro_f1: f64,
    pub delta_recall: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub test_digest: String,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| run | strategy | accuracy | macro F1 |");
        for c in DiagnosticClass::ALL {
            s.push_str(&format!(" recall {} |", c.name()));
        }
        s.push_str("\n|---|---|---|---|");
        s.push_str(&"---|".repeat(N_CLASSES));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "| {} | {} | {:.4} ({:+.4}) | {:.4} ({:+.4}) |",
                r.run_id, r.strategy, r.accuracy, r.delta_accuracy, r.macro_f1, r.delta_macro_f1
            ));
            for (v, d) in r.recall.iter().zip(&r.delta_recall) {
                s.push_str(&format!(" {v:.4} ({d:+.4}) |"));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("run_id,strategy,accuracy,macro_f1");
        for c in DiagnosticClass::ALL {
            s.push_str(&format!(",recall_{}", c.name()));
        }
        s.push_str(",delta_accuracy,delta_macro_f1");
        for c in DiagnosticClass::ALL {
            s.push_str(&format!(",delta_recall_{}", c.name()));
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}", r.run_id, r.strategy, r.accuracy, r.macro_f1));
            for v in &r.recall {
                s.push_str(&format!(",{v}"));
            }
            s.push_str(&format!(",{},{}", r.delta_accuracy, r.delta_macro_f1));
            for v in &r.delta_recall {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Side-by-side table of runs scored on one test set. Deltas are taken
/// against the first run.
pub fn compare_runs(runs: &[RunMetrics]) -> Result<Comparison> {
    let first = runs.first().ok_or_else(|| Error::invalid("no runs to compare"))?;
    if let Some(other) = runs.iter().find(|r| r.test_digest != first.test_digest) {
        return Err(Error::IncomparableRuns(first.test_digest.clone(), other.test_digest.clone()));
    }
    let recall = |r: &RunMetrics| r.per_class.iter().map(|c| c.recall).collect::<Vec<f64>>();
    let base = recall(first);
    let rows = runs
        .iter()
        .map(|r| {
            let rec = recall(r);
            ComparisonRow {
                run_id: r.run_id.clone(),
                strategy: r.strategy.clone(),
                accuracy: r.accuracy,
                macro_f1: r.macro_f1,
                delta_accuracy: r.accuracy - first.accuracy,
                delta_macro_f1: r.macro_f1 - first.macro_f1,
                delta_recall: rec.iter().zip(&base).map(|(a, b)| a - b).collect(),
                recall: rec,
            }
        })
        .collect();
    Ok(Comparison { test_digest: first.test_digest.clone(), rows })
}
