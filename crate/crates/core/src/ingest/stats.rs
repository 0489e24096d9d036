use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::EcgRecord;
use crate::class::{DiagnosticClass, N_CLASSES};
use crate::error::{Error, Result};

/// Per-class patient and beat counts with percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub patients: [usize; N_CLASSES],
    pub beats: [usize; N_CLASSES],
    pub patient_pct: [f64; N_CLASSES],
    pub beat_pct: [f64; N_CLASSES],
}

fn percentages(counts: &[usize; N_CLASSES]) -> [f64; N_CLASSES] {
    let total: usize = counts.iter().sum();
    let mut out = [0.0; N_CLASSES];
    if total > 0 {
        for (o, &c) in out.iter_mut().zip(counts) {
            *o = 100.0 * c as f64 / total as f64;
        }
    }
    out
}

impl DatasetStats {
    pub fn from_counts(patients: [usize; N_CLASSES], beats: [usize; N_CLASSES]) -> Self {
        Self {
            patient_pct: percentages(&patients),
            beat_pct: percentages(&beats),
            patients,
            beats,
        }
    }

    /// Stats built from beat counts only (patients mirror beats).
    pub fn from_beat_counts(beats: [usize; N_CLASSES]) -> Self {
        Self::from_counts(beats, beats)
    }

    pub fn beat_count(&self, class: DiagnosticClass) -> usize {
        self.beats[class.index()]
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>10}{:>12}{:>12}{:>12}", "Category", "Patients", "Percentage", "ECG beats", "Percentage")?;
        for c in DiagnosticClass::ALL {
            let i = c.index();
            writeln!(
                f,
                "{:<8}{:>10}{:>11.1}%{:>12}{:>11.1}%",
                c.name(),
                self.patients[i],
                self.patient_pct[i],
                self.beats[i],
                self.beat_pct[i]
            )?;
        }
        Ok(())
    }
}

/// Per-class distinct-patient and beat counts. `beats_per_record` is aligned
/// with `records`.
pub fn dataset_stats(records: &[EcgRecord], beats_per_record: &[usize]) -> Result<DatasetStats> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if beats_per_record.len() != records.len() {
        return Err(Error::invalid(format!(
            "{} beat counts for {} records",
            beats_per_record.len(),
            records.len()
        )));
    }
    let mut patients: [HashSet<&str>; N_CLASSES] = Default::default();
    let mut beats = [0usize; N_CLASSES];
    for (r, &n) in records.iter().zip(beats_per_record) {
        patients[r.label.index()].insert(&r.patient_id);
        beats[r.label.index()] += n;
    }
    Ok(DatasetStats::from_counts(patients.map(|s| s.len()), beats))
}
