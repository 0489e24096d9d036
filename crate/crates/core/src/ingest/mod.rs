//! Record ingestion: WFDB decoding, PTB-XL labelling, splits, dataset
//! statistics and a synthetic ECG generator for desk-scale runs.

mod ptbxl;
mod stats;
mod synthetic;
pub mod wfdb;

use std::path::Path;

use ndarray::Array2;

use crate::class::DiagnosticClass;
use crate::error::{Error, Result};

pub use ptbxl::{
    assign_superclass, parse_scp_codes, ptbxl_manifest, read_database, read_manifest,
    write_manifest, DatabaseRow, ManifestRow, ScpTable, DATABASE_CSV, STATEMENTS_CSV,
};
pub use stats::{dataset_stats, DatasetStats};
pub use synthetic::{
    generate_synthetic_ecg, generate_synthetic_with_truth, SyntheticConfig, SyntheticRecord,
};
pub use wfdb::{decode_signal_16, encode_signal_16, parse_wfdb_header, WfdbHeader};

pub const N_LEADS: usize = 12;
pub const LEAD_NAMES: [&str; N_LEADS] = [
    "I", "II", "III", "AVR", "AVL", "AVF", "V1", "V2", "V3", "V4", "V5", "V6",
];
/// Lead II, used for R-peak detection.
pub const REFERENCE_LEAD: usize = 1;
pub const TEST_FOLD: u8 = 10;

/// One 12-lead recording in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub record_id: String,
    pub patient_id: String,
    leads: Array2<f64>,
    pub sample_rate_hz: f64,
    pub label: DiagnosticClass,
    pub split_fold: Option<u8>,
}

impl EcgRecord {
    pub fn new(
        record_id: impl Into<String>,
        patient_id: impl Into<String>,
        leads: Array2<f64>,
        sample_rate_hz: f64,
        label: DiagnosticClass,
        split_fold: Option<u8>,
    ) -> Result<Self> {
        let (rows, len) = leads.dim();
        if rows != N_LEADS {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected {N_LEADS} leads, found {rows}"),
            });
        }
        if len == 0 {
            return Err(Error::invalid("record has no samples"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!("bad sample rate {sample_rate_hz}")));
        }
        if leads.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("record contains non-finite samples"));
        }
        if let Some(f) = split_fold {
            if !(1..=10).contains(&f) {
                return Err(Error::invalid(format!("fold {f} outside 1..=10")));
            }
        }
        Ok(Self {
            record_id: record_id.into(),
            patient_id: patient_id.into(),
            leads,
            sample_rate_hz,
            label,
            split_fold,
        })
    }

    /// `12 × L` samples in millivolts.
    pub fn leads(&self) -> &Array2<f64> {
        &self.leads
    }

    pub fn n_samples(&self) -> usize {
        self.leads.ncols()
    }

    pub fn lead(&self, i: usize) -> Vec<f64> {
        self.leads.row(i).to_vec()
    }

    /// Replace the samples, keeping the metadata (used by the filtering stages).
    pub fn with_leads(&self, leads: Array2<f64>) -> Result<Self> {
        Self::new(
            self.record_id.clone(),
            self.patient_id.clone(),
            leads,
            self.sample_rate_hz,
            self.label,
            self.split_fold,
        )
    }

    /// Load the record referenced by a manifest row. Relative paths are
    /// resolved against `base`.
    pub fn load(row: &ManifestRow, base: &Path) -> Result<Self> {
        let path = if row.path.is_absolute() {
            row.path.clone()
        } else {
            base.join(&row.path)
        };
        let (header, leads) = wfdb::read_record(&path)?;
        Self::new(
            row.record_id.clone(),
            row.patient_id.clone(),
            leads,
            header.sample_rate_hz,
            row.label,
            row.fold,
        )
    }

    /// Write this record as a WFDB pair under `dir` and return its manifest row.
    pub fn save(&self, dir: &Path) -> Result<ManifestRow> {
        wfdb::write_record(dir, &self.record_id, self.sample_rate_hz, &self.leads, &LEAD_NAMES)?;
        Ok(ManifestRow {
            record_id: self.record_id.clone(),
            patient_id: self.patient_id.clone(),
            label: self.label,
            fold: self.split_fold,
            path: dir.join(&self.record_id),
        })
    }
}

/// Anything that carries a PTB-XL stratified fold.
pub trait HasFold {
    fn fold(&self) -> Option<u8>;
    fn id(&self) -> &str;
}

impl HasFold for EcgRecord {
    fn fold(&self) -> Option<u8> {
        self.split_fold
    }
    fn id(&self) -> &str {
        &self.record_id
    }
}

impl HasFold for ManifestRow {
    fn fold(&self) -> Option<u8> {
        self.fold
    }
    fn id(&self) -> &str {
        &self.record_id
    }
}

/// Folds 1–9 train, fold 10 test. Items without a fold are skipped with a warning.
pub fn split_train_test<T: HasFold>(items: Vec<T>) -> (Vec<T>, Vec<T>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for item in items {
        match item.fold() {
            Some(TEST_FOLD) => test.push(item),
            Some(_) => train.push(item),
            None => log::warn!("record {} has no fold; skipped", item.id()),
        }
    }
    (train, test)
}
