use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_TIME_FEATURES: usize = 16;
pub const MODE_BINS: usize = 64;

pub const TIME_FEATURE_NAMES: [&str; N_TIME_FEATURES] = [
    "maximum",
    "minimum",
    "range",
    "mean",
    "median",
    "mode",
    "std_dev",
    "rms",
    "mean_square",
    "third_central_moment",
    "skewness",
    "kurtosis",
    "kurtosis_factor",
    "waveform_factor",
    "pulse_factor",
    "margin_factor",
];

/// Bit set of features forced to 0 because their denominator vanished.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityMask(pub u32);

impl QualityMask {
    pub const SKEWNESS: u32 = 1 << 0;
    pub const KURTOSIS: u32 = 1 << 1;
    pub const KURTOSIS_FACTOR: u32 = 1 << 2;
    pub const WAVEFORM_FACTOR: u32 = 1 << 3;
    pub const PULSE_FACTOR: u32 = 1 << 4;
    pub const MARGIN_FACTOR: u32 = 1 << 5;
    pub const FREQ_SKEW: u32 = 1 << 8;
    pub const FREQ_KURT: u32 = 1 << 9;

    pub fn set(&mut self, bit: u32) {
        self.0 |= bit;
    }

    pub fn contains(self, bit: u32) -> bool {
        self.0 & bit != 0
    }

    pub fn is_clean(self) -> bool {
        self.0 == 0
    }
}

/// Below this the spread of a window counts as zero.
pub(crate) fn negligible(value: f64, scale: f64) -> bool {
    value <= 1e-12 * scale.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFeatures {
    pub maximum: f64,
    pub minimum: f64,
    pub range: f64,
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
    pub std_dev: f64,
    pub rms: f64,
    pub mean_square: f64,
    pub third_central_moment: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub kurtosis_factor: f64,
    pub waveform_factor: f64,
    pub pulse_factor: f64,
    pub margin_factor: f64,
    pub quality: QualityMask,
}

impl TimeFeatures {
    pub fn to_array(&self) -> [f64; N_TIME_FEATURES] {
        [
            self.maximum,
            self.minimum,
            self.range,
            self.mean,
            self.median,
            self.mode,
            self.std_dev,
            self.rms,
            self.mean_square,
            self.third_central_moment,
            self.skewness,
            self.kurtosis,
            self.kurtosis_factor,
            self.waveform_factor,
            self.pulse_factor,
            self.margin_factor,
        ]
    }
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Center of the most populated of 64 equal bins over `[min, max]`
/// (earliest bin on ties).
fn histogram_mode(x: &[f64], min: f64, max: f64) -> f64 {
    let range = max - min;
    if range <= 0.0 {
        return min;
    }
    let width = range / MODE_BINS as f64;
    let mut counts = [0usize; MODE_BINS];
    for &v in x {
        let bin = (((v - min) / width).floor() as usize).min(MODE_BINS - 1);
        counts[bin] += 1;
    }
    let best = counts
        .iter()
        .enumerate()
        .fold((0, 0), |(bi, bc), (i, &c)| if c > bc { (i, c) } else { (bi, bc) })
        .0;
    min + (best as f64 + 0.5) * width
}

/// The 16 time-domain statistics of one lead window.
pub fn time_features(x: &[f64]) -> Result<TimeFeatures> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("time features need at least two samples"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("time features need finite samples"));
    }
    let nf = n as f64;
    let maximum = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let minimum = x.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = x.iter().sum::<f64>() / nf;
    let (m2, m3, m4) = x.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &v| {
        let d = v - mean;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let std_dev = m2.sqrt();
    let mean_square = x.iter().map(|v| v * v).sum::<f64>() / nf;
    let rms = mean_square.sqrt();
    let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / nf;
    let max_abs = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mean_sqrt_abs = x.iter().map(|v| v.abs().sqrt()).sum::<f64>() / nf;

    let mut quality = QualityMask::default();
    let (skewness, kurtosis) = if negligible(std_dev, max_abs) {
        quality.set(QualityMask::SKEWNESS);
        quality.set(QualityMask::KURTOSIS);
        (0.0, 0.0)
    } else {
        (m3 / (m2 * std_dev), m4 / (m2 * m2))
    };
    let kurtosis_factor = if quality.contains(QualityMask::KURTOSIS) || mean_square == 0.0 {
        quality.set(QualityMask::KURTOSIS_FACTOR);
        0.0
    } else {
        kurtosis / (mean_square * mean_square)
    };
    let (waveform_factor, pulse_factor, margin_factor) = if mean_abs == 0.0 {
        quality.set(QualityMask::WAVEFORM_FACTOR);
        quality.set(QualityMask::PULSE_FACTOR);
        quality.set(QualityMask::MARGIN_FACTOR);
        (0.0, 0.0, 0.0)
    } else {
        (
            rms / mean_abs,
            max_abs / mean_abs,
            max_abs / (mean_sqrt_abs * mean_sqrt_abs),
        )
    };

    Ok(TimeFeatures {
        maximum,
        minimum,
        range: maximum - minimum,
        mean,
        median: median(x),
        mode: histogram_mode(x, minimum, maximum),
        std_dev,
        rms,
        mean_square,
        third_central_moment: m3,
        skewness,
        kurtosis,
        kurtosis_factor,
        waveform_factor,
        pulse_factor,
        margin_factor,
        quality,
    })
}
