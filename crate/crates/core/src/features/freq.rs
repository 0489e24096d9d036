use serde::{Deserialize, Serialize};

use super::time::QualityMask;
use crate::dsp::Spectrum;
use crate::error::{Error, Result};

pub const N_FREQ_FEATURES: usize = 10;

pub const FREQ_FEATURE_NAMES: [&str; N_FREQ_FEATURES] = [
    "fft_mean",
    "fft_variance",
    "fft_entropy",
    "fft_energy",
    "fft_skew",
    "fft_kurt",
    "fft_shape_mean",
    "fft_shape_std",
    "fft_shape_skew",
    "fft_shape_kurt",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqConfig {
    /// Centre the shape-std feature on the shape mean (Z7) instead of the
    /// spectral kurtosis (Z6).
    pub z8_uses_shape_mean: bool,
}

/// Spectral statistics Z1..Z10 of one lead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqFeatures {
    pub z: [f64; N_FREQ_FEATURES],
    pub quality: QualityMask,
}

/// Z1..Z10 over the bins of `spectrum`, with `F(k)` the magnitudes and `f(k)` the
/// bin frequencies:
///
/// * Z1 = ΣF/N, Z2 = Σ(F−Z1)²/(N−1), Z3 = −Σ p log₂ p with p = F/(Z1·N),
///   Z4 = ΣF²/N
/// * Z5, Z6 = standardized third/fourth moments of F (0 when Z2 = 0)
/// * Z7 = Σ(f−F)/ΣF, Z8 = √(Σ(f−Z6)²F/ΣF), Z9 = Σ(f−F)³F/ΣF,
///   Z10 = Σ(f−F)⁴F/ΣF
pub fn freq_features(spectrum: &Spectrum, cfg: &FreqConfig) -> Result<FreqFeatures> {
    let mags = spectrum.magnitudes();
    let freqs = spectrum.freqs();
    let n = mags.len();
    if n < 2 {
        return Err(Error::invalid("frequency features need at least two bins"));
    }
    let total: f64 = mags.iter().sum();
    if total == 0.0 {
        return Err(Error::AllZeroSpectrum);
    }
    let nf = n as f64;
    let z1 = total / nf;
    let z2 = mags.iter().map(|m| (m - z1).powi(2)).sum::<f64>() / (nf - 1.0);
    let z3 = -mags
        .iter()
        .map(|m| m / (z1 * nf))
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>();
    let z4 = mags.iter().map(|m| m * m).sum::<f64>() / nf;

    let mut quality = QualityMask::default();
    let scale = mags.iter().copied().fold(0.0, f64::max);
    let (z5, z6) = if super::time::negligible(z2.sqrt(), scale) {
        quality.set(QualityMask::FREQ_SKEW);
        quality.set(QualityMask::FREQ_KURT);
        (0.0, 0.0)
    } else {
        let sd = z2.sqrt();
        let standardized = |p: i32| mags.iter().map(|m| ((m - z1) / sd).powi(p)).sum::<f64>() / nf;
        (standardized(3), standardized(4))
    };

    let weighted = |g: &dyn Fn(f64, f64) -> f64| -> f64 {
        freqs.iter().zip(mags).map(|(&f, &m)| g(f, m)).sum::<f64>() / total
    };
    let z7 = freqs.iter().zip(mags).map(|(f, m)| f - m).sum::<f64>() / total;
    let centre = if cfg.z8_uses_shape_mean { z7 } else { z6 };
    let z8 = weighted(&|f, m| (f - centre).powi(2) * m).sqrt();
    let z9 = weighted(&|f, m| (f - m).powi(3) * m);
    let z10 = weighted(&|f, m| (f - m).powi(4) * m);

    Ok(FreqFeatures {
        z: [z1, z2, z3, z4, z5, z6, z7, z8, z9, z10],
        quality,
    })
}
