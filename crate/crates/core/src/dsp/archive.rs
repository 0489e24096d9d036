//! Binary beat archives: each beat is `12 × W` little-endian f32 values,
//! lead-major, with no header. A CSV index sidecar carries the metadata.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Beat;
use crate::class::DiagnosticClass;
use crate::error::{Error, Result};
use crate::ingest::N_LEADS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatIndexRow {
    pub beat_id: usize,
    pub record_id: String,
    pub label: DiagnosticClass,
    pub fold: Option<u8>,
    pub r_peak_sample: usize,
}

pub fn write_beats(bin_path: &Path, index_path: &Path, beats: &[Beat]) -> Result<()> {
    let mut bin = BufWriter::new(fs::File::create(bin_path)?);
    let mut idx = csv::Writer::from_path(index_path)?;
    for (i, b) in beats.iter().enumerate() {
        for v in b.window.iter() {
            bin.write_all(&(*v as f32).to_le_bytes())?;
        }
        idx.serialize(BeatIndexRow {
            beat_id: i,
            record_id: b.source_record.clone(),
            label: b.label,
            fold: b.fold,
            r_peak_sample: b.record_offset,
        })?;
    }
    bin.flush()?;
    idx.flush()?;
    Ok(())
}

pub fn read_beats(bin_path: &Path, index_path: &Path, width: usize) -> Result<Vec<Beat>> {
    let bytes = fs::read(bin_path)?;
    let per_beat = N_LEADS * width * 4;
    let mut rdr = csv::Reader::from_path(index_path)?;
    let rows: Vec<BeatIndexRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if bytes.len() != rows.len() * per_beat {
        return Err(Error::TruncatedSignal {
            expected: rows.len() * per_beat,
            found: bytes.len(),
        });
    }
    rows.into_iter()
        .zip(bytes.chunks_exact(per_beat))
        .map(|(row, chunk)| {
            let flat: Vec<f64> = chunk
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            let mut beat = Beat::from_flat(&flat, width, row.record_id, row.label)?;
            beat.fold = row.fold;
            beat.record_offset = row.r_peak_sample;
            Ok(beat)
        })
        .collect()
}
