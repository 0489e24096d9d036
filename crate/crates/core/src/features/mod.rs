//! Per-lead time- and frequency-domain statistics and the model input vector.
//!
//! Layout of a [`FeatureVector`] (lead-major): for each of the 12 leads,
//! the downsampled raw window, then the 16 time features, then Z1..Z10.

mod freq;
pub mod matrix;
mod time;

use serde::{Deserialize, Serialize};

use crate::class::DiagnosticClass;
use crate::dsp::{downsample, fft_magnitude, Beat};
use crate::error::{Error, Result};
use crate::ingest::N_LEADS;
use crate::par;

pub use freq::{freq_features, FreqConfig, FreqFeatures, FREQ_FEATURE_NAMES, N_FREQ_FEATURES};
pub use time::{time_features, QualityMask, TimeFeatures, MODE_BINS, N_TIME_FEATURES, TIME_FEATURE_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Rate of the segmented beats.
    pub beat_rate_hz: f64,
    /// Rate of the raw samples placed in the vector.
    pub raw_rate_hz: f64,
    pub freq: FreqConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            beat_rate_hz: 100.0,
            raw_rate_hz: 50.0,
            freq: FreqConfig::default(),
        }
    }
}

impl FeatureConfig {
    pub fn raw_len(&self, beat_width: usize) -> usize {
        let factor = (self.beat_rate_hz / self.raw_rate_hz).round().max(1.0) as usize;
        beat_width.div_ceil(factor)
    }

    pub fn per_lead(&self, beat_width: usize) -> usize {
        self.raw_len(beat_width) + N_TIME_FEATURES + N_FREQ_FEATURES
    }

    /// Total vector length; 672 for 60-sample beats at 100 → 50 Hz.
    pub fn vector_len(&self, beat_width: usize) -> usize {
        N_LEADS * self.per_lead(beat_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: DiagnosticClass,
    /// Per-lead quality flags (time and frequency bits combined).
    pub quality: Vec<QualityMask>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Build the model input for one beat. The raw part and time features use
/// the downsampled window; the frequency features use the full-rate window.
pub fn assemble_vector(beat: &Beat, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let width = beat.width();
    if beat.window.nrows() != N_LEADS || width < 2 {
        return Err(Error::invalid("beat must be 12 leads by at least 2 samples"));
    }
    let mut values = Vec::with_capacity(cfg.vector_len(width));
    let mut quality = Vec::with_capacity(N_LEADS);
    for lead in beat.window.rows() {
        let lead = lead.to_vec();
        let raw = downsample(&lead, cfg.beat_rate_hz, cfg.raw_rate_hz)?;
        let tf = time_features(&raw)?;
        let ff = freq_features(&fft_magnitude(&lead, cfg.beat_rate_hz)?, &cfg.freq)?;
        values.extend_from_slice(&raw);
        values.extend_from_slice(&tf.to_array());
        values.extend_from_slice(&ff.z);
        quality.push(QualityMask(tf.quality.0 | ff.quality.0));
    }
    Ok(FeatureVector {
        values,
        label: beat.label,
        quality,
    })
}

/// Assemble every beat in parallel. Beats that fail (e.g. all-zero spectra)
/// are returned as errors in place so the caller can report them.
pub fn assemble_all(beats: &[Beat], cfg: &FeatureConfig) -> Vec<Result<FeatureVector>> {
    par::map(beats, |b| assemble_vector(b, cfg))
}

/// Column names matching the vector layout.
pub fn feature_names(beat_width: usize, cfg: &FeatureConfig) -> Vec<String> {
    let raw_len = cfg.raw_len(beat_width);
    crate::ingest::LEAD_NAMES
        .iter()
        .flat_map(|lead| {
            (0..raw_len)
                .map(move |i| format!("{lead}_raw{i}"))
                .chain(TIME_FEATURE_NAMES.iter().map(move |n| format!("{lead}_{n}")))
                .chain(FREQ_FEATURE_NAMES.iter().map(move |n| format!("{lead}_{n}")))
        })
        .collect()
}
