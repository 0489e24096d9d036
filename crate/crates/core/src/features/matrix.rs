//! Feature matrix files: CSV, and a binary form where each row is the
//! feature values as little-endian f32 followed by one label byte.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::FeatureVector;
use crate::class::DiagnosticClass;
use crate::error::{Error, Result};

pub fn write_binary(path: &Path, rows: &[FeatureVector]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in rows {
        for v in &r.values {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        w.write_all(&[r.label.index() as u8])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path, row_len: usize) -> Result<Vec<FeatureVector>> {
    let bytes = fs::read(path)?;
    let stride = 4 * row_len + 1;
    if row_len == 0 || bytes.len() % stride != 0 {
        return Err(Error::TruncatedSignal {
            expected: stride * (bytes.len() / stride.max(1) + 1),
            found: bytes.len(),
        });
    }
    bytes
        .chunks_exact(stride)
        .map(|row| {
            let values = row[..4 * row_len]
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            let label = DiagnosticClass::from_index(row[4 * row_len] as usize)
                .ok_or_else(|| Error::invalid(format!("bad label byte {}", row[4 * row_len])))?;
            Ok(FeatureVector {
                values,
                label,
                quality: Vec::new(),
            })
        })
        .collect()
}

pub fn write_csv(path: &Path, names: &[String], rows: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = r.values.iter().map(|v| format!("{v:e}")).collect();
        rec.push(r.label.name().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
