//! PTB-XL metadata: `ptbxl_database.csv`, `scp_statements.csv`, and the
//! superclass labelling rule.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::class::DiagnosticClass;
use crate::error::{Error, Result};

pub const DATABASE_CSV: &str = "ptbxl_database.csv";
pub const STATEMENTS_CSV: &str = "scp_statements.csv";

/// SCP code → diagnostic superclass (`None` for non-diagnostic statements).
#[derive(Debug, Clone, Default)]
pub struct ScpTable {
    codes: HashMap<String, Option<DiagnosticClass>>,
}

impl ScpTable {
    pub fn insert(&mut self, code: &str, class: Option<DiagnosticClass>) {
        self.codes.insert(code.to_string(), class);
    }

    pub fn get(&self, code: &str) -> Option<Option<DiagnosticClass>> {
        self.codes.get(code).copied()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let class_col = headers
            .iter()
            .position(|h| h == "diagnostic_class")
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: "scp_statements.csv has no diagnostic_class column".into(),
            })?;
        let mut table = ScpTable::default();
        for row in rdr.records() {
            let row = row?;
            let code = row.get(0).unwrap_or("").trim();
            if code.is_empty() {
                continue;
            }
            let class = row
                .get(class_col)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .and_then(|s| s.parse::<DiagnosticClass>().ok());
            table.insert(code, class);
        }
        Ok(table)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }
}

/// Parse the Python-dict literal stored in the `scp_codes` column,
/// e.g. `{'NORM': 100.0, 'SR': 0.0}`.
pub fn parse_scp_codes(text: &str) -> Result<BTreeMap<String, f64>> {
    let inner = text
        .trim()
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::invalid(format!("scp_codes is not a dict literal: {text:?}")))?;
    let mut out = BTreeMap::new();
    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("bad scp_codes entry {item:?}")))?;
        let k = k.trim().trim_matches(|c| c == '\'' || c == '"');
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad likelihood in {item:?}")))?;
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

/// Superclass of the highest-likelihood diagnostic code. Ties go to the
/// lower class index. Unknown codes are logged and skipped; records with no
/// diagnostic code yield `None` (unlabeled).
pub fn assign_superclass(
    scp_codes: &BTreeMap<String, f64>,
    table: &ScpTable,
) -> Option<DiagnosticClass> {
    let mut best: Option<(f64, DiagnosticClass)> = None;
    for (code, &likelihood) in scp_codes {
        let class = match table.get(code) {
            Some(Some(c)) => c,
            Some(None) => continue,
            None => {
                log::warn!("unknown SCP code {code:?} skipped");
                continue;
            }
        };
        best = match best {
            None => Some((likelihood, class)),
            Some((l, c)) if likelihood > l || (likelihood == l && class < c) => {
                Some((likelihood, class))
            }
            keep => keep,
        };
    }
    best.map(|(_, c)| c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseRow {
    pub ecg_id: String,
    pub patient_id: String,
    pub scp_codes: BTreeMap<String, f64>,
    pub strat_fold: Option<u8>,
    pub filename_lr: String,
}

pub fn read_database<R: std::io::Read>(reader: R) -> Result<Vec<DatabaseRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("{DATABASE_CSV} has no {name} column"),
        })
    };
    let (c_id, c_pat, c_scp, c_fold, c_file) = (
        col("ecg_id")?,
        col("patient_id")?,
        col("scp_codes")?,
        col("strat_fold")?,
        col("filename_lr")?,
    );
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let scp_codes = parse_scp_codes(field(c_scp)).map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        let strat_fold = field(c_fold)
            .parse::<f64>()
            .ok()
            .filter(|f| (1.0..=10.0).contains(f) && f.fract() == 0.0)
            .map(|f| f as u8);
        rows.push(DatabaseRow {
            ecg_id: normalize_id(field(c_id)),
            patient_id: normalize_id(field(c_pat)),
            scp_codes,
            strat_fold,
            filename_lr: field(c_file).to_string(),
        });
    }
    Ok(rows)
}

/// PTB-XL stores ids as floats ("15709.0").
fn normalize_id(s: &str) -> String {
    match s.strip_suffix(".0") {
        Some(stripped) if stripped.chars().all(|c| c.is_ascii_digit()) => stripped.to_string(),
        _ => s.to_string(),
    }
}

/// One row of the normalized dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub record_id: String,
    pub patient_id: String,
    pub label: DiagnosticClass,
    pub fold: Option<u8>,
    /// Header path without extension, relative to the manifest directory or absolute.
    pub path: PathBuf,
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for r in rdr.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

/// Build manifest rows for a PTB-XL tree. Unlabeled records are dropped.
pub fn ptbxl_manifest(data_root: &Path) -> Result<Vec<ManifestRow>> {
    let db_path = data_root.join(DATABASE_CSV);
    let scp_path = data_root.join(STATEMENTS_CSV);
    for p in [&db_path, &scp_path] {
        if !p.is_file() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("missing metadata file {}", p.display()),
            )));
        }
    }
    let table = ScpTable::from_path(&scp_path)?;
    let rows = read_database(std::fs::File::open(&db_path)?)?;
    let mut out = Vec::with_capacity(rows.len());
    let mut unlabeled = 0usize;
    for row in rows {
        match assign_superclass(&row.scp_codes, &table) {
            Some(label) => out.push(ManifestRow {
                record_id: row.ecg_id,
                patient_id: row.patient_id,
                label,
                fold: row.strat_fold,
                path: data_root.join(&row.filename_lr),
            }),
            None => unlabeled += 1,
        }
    }
    if unlabeled > 0 {
        log::info!("{unlabeled} records without a diagnostic superclass dropped");
    }
    Ok(out)
}
