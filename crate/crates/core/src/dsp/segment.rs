use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::class::DiagnosticClass;
use crate::error::{Error, Result};
use crate::ingest::{EcgRecord, N_LEADS};

/// One heartbeat: all 12 leads over a window centered on an R-peak.
#[derive(Debug, Clone, PartialEq)]
pub struct Beat {
    /// `12 × W` samples.
    pub window: Array2<f64>,
    /// Position of the R-peak inside the window (`W/2`).
    pub r_peak_index: usize,
    pub source_record: String,
    /// R-peak position in the source record.
    pub record_offset: usize,
    pub label: DiagnosticClass,
    pub fold: Option<u8>,
}

impl Beat {
    pub fn width(&self) -> usize {
        self.window.ncols()
    }

    /// Lead-major flattening (`12·W` values).
    pub fn flatten(&self) -> Vec<f64> {
        self.window.iter().copied().collect()
    }

    pub fn from_flat(
        flat: &[f64],
        width: usize,
        source_record: impl Into<String>,
        label: DiagnosticClass,
    ) -> Result<Self> {
        if width == 0 || flat.len() != N_LEADS * width {
            return Err(Error::invalid(format!(
                "flat beat of {} values does not match 12 × {width}",
                flat.len()
            )));
        }
        let window = Array2::from_shape_vec((N_LEADS, width), flat.to_vec())
            .map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self {
            window,
            r_peak_index: width / 2,
            source_record: source_record.into(),
            record_offset: 0,
            label,
            fold: None,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub kept: usize,
    pub skipped_at_edges: usize,
}

/// Slice `[r − W/2, r + W/2)` from every lead for each R-peak whose window
/// fits inside the record.
pub fn segment_beats(
    record: &EcgRecord,
    r_peaks: &[usize],
    window_samples: usize,
) -> Result<(Vec<Beat>, SegmentReport)> {
    if window_samples == 0 || window_samples % 2 != 0 {
        return Err(Error::invalid(format!(
            "beat window must be even and positive, got {window_samples}"
        )));
    }
    let half = window_samples / 2;
    let n = record.n_samples();
    let mut report = SegmentReport::default();
    let mut beats = Vec::with_capacity(r_peaks.len());
    for &r in r_peaks {
        if r < half || r + half > n {
            report.skipped_at_edges += 1;
            continue;
        }
        let window = record.leads().slice(s![.., r - half..r + half]).to_owned();
        beats.push(Beat {
            window,
            r_peak_index: half,
            source_record: record.record_id.clone(),
            record_offset: r,
            label: record.label,
            fold: record.split_fold,
        });
    }
    report.kept = beats.len();
    Ok((beats, report))
}
