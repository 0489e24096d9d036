use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// One-sided magnitude spectrum `F(k)` with bin frequencies `f(k)` in hertz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    magnitudes: Vec<f64>,
    freqs: Vec<f64>,
    /// Length of the time-domain signal the spectrum came from.
    n_time: usize,
}

impl Spectrum {
    /// Build a spectrum directly (used by the frequency-feature tests).
    pub fn new(magnitudes: Vec<f64>, freqs: Vec<f64>) -> Result<Self> {
        if magnitudes.len() != freqs.len() {
            return Err(Error::invalid("magnitude and frequency lengths differ"));
        }
        if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("magnitudes must be finite and nonnegative"));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("bin frequencies must ascend"));
        }
        let n_time = 2 * magnitudes.len().saturating_sub(1);
        Ok(Self { magnitudes, freqs, n_time })
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Time-domain energy `Σ x²` recovered from the one-sided magnitudes.
    pub fn energy(&self) -> f64 {
        let n = self.n_time;
        let last = self.magnitudes.len() - 1;
        let folded: f64 = self
            .magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let nyquist = n % 2 == 0 && k == last;
                let w = if k == 0 || nyquist { 1.0 } else { 2.0 };
                w * m * m
            })
            .sum();
        folded / n as f64
    }

    /// Index of the largest magnitude.
    pub fn peak_bin(&self) -> usize {
        self.magnitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided DFT magnitude `|X_k|`, `k = 0..=N/2`, with `f_k = k·fs/N`.
pub fn fft_magnitude(signal: &[f64], sample_rate_hz: f64) -> Result<Spectrum> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::invalid("spectrum needs at least two samples"));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let bins = n / 2 + 1;
    let magnitudes = buf[..bins].iter().map(|c| c.norm()).collect();
    let freqs = (0..bins).map(|k| k as f64 * sample_rate_hz / n as f64).collect();
    Ok(Spectrum { magnitudes, freqs, n_time: n })
}
