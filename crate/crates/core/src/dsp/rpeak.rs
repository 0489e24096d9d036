//! Pan–Tompkins-style QRS detection.

use super::filter::{window_filter, Biquad};
use crate::error::{Error, Result};

/// Minimum spacing between two reported R-peaks.
pub const REFRACTORY_S: f64 = 0.2;
const INTEGRATION_S: f64 = 0.15;
const REFINE_S: f64 = 0.08;

/// R-peak sample indices, strictly increasing and at least 200 ms apart.
///
/// Chain: zero-phase 5–15 Hz band-pass, five-point derivative, squaring,
/// 150 ms moving-window integration, then adaptive signal/noise thresholds
/// with search-back. Each detection is refined to the signal maximum nearby.
pub fn detect_r_peaks(signal: &[f64], sample_rate_hz: f64) -> Result<Vec<usize>> {
    if !(sample_rate_hz > 30.0) {
        return Err(Error::invalid("R-peak detection needs a sample rate above 30 Hz"));
    }
    let n = signal.len();
    if (n as f64) < 2.0 * sample_rate_hz {
        return Err(Error::invalid("R-peak detection needs at least 2 s of signal"));
    }
    let fs = sample_rate_hz;

    let hp = Biquad::highpass(5.0, fs)?;
    let lp = Biquad::lowpass(15.0, fs)?;
    let band = lp.filtfilt(&hp.filtfilt(signal));

    let deriv: Vec<f64> = (0..n)
        .map(|i| {
            let at = |k: isize| band[(i as isize + k).clamp(0, n as isize - 1) as usize];
            (2.0 * at(2) + at(1) - at(-1) - 2.0 * at(-2)) / 8.0
        })
        .collect();
    let squared: Vec<f64> = deriv.iter().map(|d| d * d).collect();
    let width = ((INTEGRATION_S * fs).round() as usize) | 1;
    let mwi = window_filter(&squared, width)?;

    let global_max = mwi.iter().cloned().fold(0.0, f64::max);
    if global_max <= 1e-12 {
        return Ok(Vec::new());
    }

    let refractory = (REFRACTORY_S * fs).round() as usize;
    let candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1])
        .collect();

    let learn = (2.0 * fs) as usize;
    let mut spki = 0.25 * mwi[..learn].iter().cloned().fold(0.0, f64::max);
    let mut npki = 0.5 * mwi[..learn].iter().sum::<f64>() / learn as f64;
    let mut qrs: Vec<usize> = Vec::new();
    let mut noise_since_last: Vec<usize> = Vec::new();
    let mut rr_avg: Option<f64> = None;

    for &c in &candidates {
        let threshold = npki + 0.25 * (spki - npki);
        let v = mwi[c];
        if let Some(&last) = qrs.last() {
            if c - last < refractory {
                if v > mwi[last] {
                    *qrs.last_mut().unwrap() = c;
                }
                continue;
            }
            // Search back for a missed beat when the gap is too long.
            if let Some(rr) = rr_avg {
                if (c - last) as f64 > 1.66 * rr {
                    let best = noise_since_last
                        .iter()
                        .copied()
                        .filter(|&p| p - last >= refractory && c - p >= refractory)
                        .filter(|&p| mwi[p] > 0.5 * threshold)
                        .max_by(|a, b| mwi[*a].total_cmp(&mwi[*b]));
                    if let Some(p) = best {
                        spki = 0.25 * mwi[p] + 0.75 * spki;
                        qrs.push(p);
                    }
                }
            }
        }
        if v > threshold {
            spki = 0.125 * v + 0.875 * spki;
            if let Some(&last) = qrs.last() {
                let rr = (c - last) as f64;
                rr_avg = Some(rr_avg.map_or(rr, |a| 0.875 * a + 0.125 * rr));
            }
            qrs.push(c);
            noise_since_last.clear();
        } else {
            npki = 0.125 * v + 0.875 * npki;
            noise_since_last.push(c);
        }
    }

    // Refine to the local maximum of the input and re-impose the refractory gap.
    let reach = (REFINE_S * fs).round() as usize;
    let mut refined: Vec<usize> = qrs
        .iter()
        .map(|&c| {
            let lo = c.saturating_sub(reach);
            let hi = (c + reach + 1).min(n);
            (lo..hi).max_by(|a, b| signal[*a].total_cmp(&signal[*b])).unwrap_or(c)
        })
        .collect();
    refined.sort_unstable();
    let mut out: Vec<usize> = Vec::with_capacity(refined.len());
    for p in refined {
        match out.last_mut() {
            Some(last) if p - *last < refractory => {
                if signal[p] > signal[*last] {
                    *last = p;
                }
            }
            _ => out.push(p),
        }
    }
    Ok(out)
}
