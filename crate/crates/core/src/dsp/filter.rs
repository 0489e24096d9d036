//! Moving-average, biquad and FIR filters used by the preprocessing chain.

use crate::error::{Error, Result};

/// Map an out-of-range index into `0..n` by mirror reflection about the edge
/// samples (`d c b | a b c d | c b a`).
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Centered moving average of odd width with reflection padding.
pub fn window_filter(signal: &[f64], n_points: usize) -> Result<Vec<f64>> {
    if n_points == 0 || n_points % 2 == 0 {
        return Err(Error::invalid(format!("window width must be odd and positive, got {n_points}")));
    }
    let n = signal.len();
    if n == 0 || n_points == 1 {
        return Ok(signal.to_vec());
    }
    let half = (n_points / 2) as isize;
    let scale = 1.0 / n_points as f64;
    Ok((0..n as isize)
        .map(|i| {
            (i - half..=i + half)
                .map(|j| signal[reflect_index(j, n)])
                .sum::<f64>()
                * scale
        })
        .collect())
}

/// Second-order IIR section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Notch at `f0_hz` with quality factor `q` (bandwidth `f0/q` at -3 dB).
    pub fn notch(f0_hz: f64, sample_rate_hz: f64, q: f64) -> Result<Self> {
        let nyquist = sample_rate_hz / 2.0;
        if !(f0_hz > 0.0 && f0_hz < nyquist) {
            return Err(Error::invalid(format!(
                "notch frequency {f0_hz} Hz must lie strictly inside (0, {nyquist}) Hz"
            )));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::invalid("quality factor must be positive"));
        }
        let w0 = 2.0 * f0_hz / sample_rate_hz * std::f64::consts::PI;
        let bw = w0 / q;
        // Gain at the band edges is 1/√2.
        let beta = (bw / 2.0).tan();
        let gain = 1.0 / (1.0 + beta);
        let c = w0.cos();
        Ok(Self {
            b: [gain, -2.0 * c * gain, gain],
            a: [-2.0 * c * gain, 2.0 * gain - 1.0],
        })
    }

    fn rbj(cutoff_hz: f64, sample_rate_hz: f64, high: bool) -> Result<Self> {
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(Error::invalid(format!("cutoff {cutoff_hz} Hz outside (0, Nyquist)")));
        }
        let w0 = std::f64::consts::TAU * cutoff_hz / sample_rate_hz;
        let alpha = w0.sin() / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        let c = w0.cos();
        let a0 = 1.0 + alpha;
        let b = if high {
            [(1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0]
        } else {
            [(1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0]
        };
        Ok(Self {
            b: b.map(|v| v / a0),
            a: [-2.0 * c / a0, (1.0 - alpha) / a0],
        })
    }

    /// Butterworth (Q = 1/√2) low-pass.
    pub fn lowpass(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        Self::rbj(cutoff_hz, sample_rate_hz, false)
    }

    /// Butterworth (Q = 1/√2) high-pass.
    pub fn highpass(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        Self::rbj(cutoff_hz, sample_rate_hz, true)
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / (1.0 + self.a[0] + self.a[1])
    }

    /// Causal pass (transposed direct form II) from state `z`.
    fn run(&self, x: &[f64], mut z: [f64; 2]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        x.iter()
            .map(|&v| {
                let y = b0 * v + z[0];
                z[0] = b1 * v - a1 * y + z[1];
                z[1] = b2 * v - a2 * y;
                y
            })
            .collect()
    }

    /// Causal pass from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        self.run(x, [0.0, 0.0])
    }

    /// Steady-state state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z1 = g - self.b[0];
        let z2 = self.b[2] - self.a[1] * g;
        [z1, z2]
    }

    /// Zero-phase forward-backward pass with odd-extension padding and
    /// steady-state initial conditions on both passes.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = 9.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.step_state();
        let scaled = |z: [f64; 2], s: f64| [z[0] * s, z[1] * s];
        let mut fwd = self.run(&ext, scaled(zi, ext[0]));
        fwd.reverse();
        let mut back = self.run(&fwd, scaled(zi, fwd[0]));
        back.reverse();
        back[pad..pad + n].to_vec()
    }
}

/// Zero-phase 50 Hz (by default) notch.
pub fn notch_filter(signal: &[f64], sample_rate_hz: f64, f0_hz: f64, q: f64) -> Result<Vec<f64>> {
    Ok(Biquad::notch(f0_hz, sample_rate_hz, q)?.filtfilt(signal))
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..60 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

const KAISER_BETA: f64 = 5.0;

/// Kaiser-windowed sinc low-pass with unit DC gain.
pub(crate) fn lowpass_taps(cutoff_hz: f64, sample_rate_hz: f64, half_len: usize) -> Vec<f64> {
    let fc = cutoff_hz / sample_rate_hz;
    let m = half_len as f64;
    let norm = bessel_i0(KAISER_BETA);
    let mut taps: Vec<f64> = (0..=2 * half_len)
        .map(|i| {
            let k = i as f64 - m;
            let sinc = if k == 0.0 {
                2.0 * fc
            } else {
                (std::f64::consts::TAU * fc * k).sin() / (std::f64::consts::PI * k)
            };
            let r = k / m;
            sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Anti-alias (cutoff `0.45·to_hz`) then keep every `from_hz/to_hz`-th sample.
pub fn downsample(signal: &[f64], from_hz: f64, to_hz: f64) -> Result<Vec<f64>> {
    if !(from_hz > 0.0 && to_hz > 0.0) {
        return Err(Error::invalid("rates must be positive"));
    }
    let ratio = from_hz / to_hz;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "{from_hz} Hz → {to_hz} Hz is not an integer decimation"
        )));
    }
    let factor = factor as usize;
    if factor == 1 || signal.is_empty() {
        return Ok(signal.to_vec());
    }
    let half = 20 * factor;
    let taps = lowpass_taps(0.45 * to_hz, from_hz, half);
    let n = signal.len();
    Ok((0..n)
        .step_by(factor)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(k, h)| h * signal[reflect_index(i as isize + k as isize - half as isize, n)])
                .sum()
        })
        .collect())
}
