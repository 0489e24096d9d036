//! Preprocessing: spectrum, smoothing, powerline notch, R-peak detection,
//! beat segmentation and decimation.

pub mod archive;
mod filter;
mod rpeak;
mod segment;
mod spectrum;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{EcgRecord, REFERENCE_LEAD};

pub use filter::{downsample, notch_filter, window_filter, Biquad};
pub use rpeak::{detect_r_peaks, REFRACTORY_S};
pub use segment::{segment_beats, Beat, SegmentReport};
pub use spectrum::{fft_magnitude, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    pub n_points: usize,
    pub notch_f0_hz: f64,
    pub notch_q: f64,
    /// Beat window length in samples at the record rate.
    pub window_samples: usize,
    pub downsample_hz: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            n_points: 5,
            notch_f0_hz: 50.0,
            notch_q: 30.0,
            window_samples: 60,
            downsample_hz: 50.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub beats: Vec<Beat>,
    pub r_peaks: Vec<usize>,
    pub report: SegmentReport,
    /// False when the notch frequency is not below Nyquist for this record.
    pub notch_applied: bool,
}

/// Smooth and notch every lead. The notch is skipped (and reported) when
/// `f0` is not strictly below the record's Nyquist frequency.
pub fn clean_record(record: &EcgRecord, cfg: &DspConfig) -> Result<(EcgRecord, bool)> {
    let fs = record.sample_rate_hz;
    let notch = Biquad::notch(cfg.notch_f0_hz, fs, cfg.notch_q).ok();
    let (rows, cols) = record.leads().dim();
    let mut out = Array2::zeros((rows, cols));
    for (lead, row) in record.leads().rows().into_iter().enumerate() {
        let smoothed = window_filter(&row.to_vec(), cfg.n_points)?;
        let filtered = match &notch {
            Some(b) => b.filtfilt(&smoothed),
            None => smoothed,
        };
        out.row_mut(lead).assign(&ndarray::Array1::from(filtered));
    }
    Ok((record.with_leads(out)?, notch.is_some()))
}

/// Filter, detect R-peaks on lead II and cut fixed windows around them.
pub fn preprocess_record(record: &EcgRecord, cfg: &DspConfig) -> Result<Preprocessed> {
    let (clean, notch_applied) = clean_record(record, cfg)?;
    let r_peaks = detect_r_peaks(&clean.lead(REFERENCE_LEAD), clean.sample_rate_hz)?;
    let (beats, report) = segment_beats(&clean, &r_peaks, cfg.window_samples)?;
    Ok(Preprocessed {
        beats,
        r_peaks,
        report,
        notch_applied,
    })
}
