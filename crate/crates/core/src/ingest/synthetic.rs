//! Gaussian-bump 12-lead ECG generator with known R-peak times.
//!
//! Each beat is a sum of P, Q, R, S and T bumps scaled per lead. Classes
//! differ by template shifts whose strength ("severity") is drawn per record,
//! so weakly affected records overlap with NORM.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EcgRecord, N_LEADS};
use crate::class::{DiagnosticClass, N_CLASSES};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub heart_rate_bpm: (f64, f64),
    /// Relative beat-to-beat RR jitter (standard deviation).
    pub rr_jitter: f64,
    /// White-noise standard deviation before smoothing, mV.
    pub noise_mv: f64,
    pub wander_mv: f64,
    /// Range of the per-record class-effect strength.
    pub severity: (f64, f64),
    /// Per-record amplitude variability (relative standard deviation).
    pub amplitude_jitter: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 100.0,
            duration_s: 10.0,
            heart_rate_bpm: (55.0, 95.0),
            rr_jitter: 0.03,
            noise_mv: 0.03,
            wander_mv: 0.05,
            severity: (0.2, 1.0),
            amplitude_jitter: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecord {
    pub record: EcgRecord,
    /// Programmed R-peak sample indices.
    pub r_peaks: Vec<usize>,
}

#[derive(Clone, Copy)]
struct Wave {
    amp: f64,
    offset_s: f64,
    width_s: f64,
}

// Per-lead multipliers for (P, Q, R, S, T).
const LEAD_GAINS: [[f64; 5]; N_LEADS] = [
    [0.10, -0.05, 0.60, -0.10, 0.20],
    [0.15, -0.08, 1.00, -0.20, 0.30],
    [0.05, -0.05, 0.45, -0.15, 0.10],
    [-0.12, 0.05, -0.75, 0.10, -0.25],
    [0.05, -0.05, 0.30, -0.10, 0.10],
    [0.10, -0.06, 0.70, -0.15, 0.20],
    [0.08, 0.00, 0.25, -0.90, -0.05],
    [0.08, 0.00, 0.50, -1.10, 0.35],
    [0.08, -0.03, 0.90, -0.70, 0.45],
    [0.08, -0.05, 1.30, -0.40, 0.45],
    [0.08, -0.07, 1.10, -0.20, 0.35],
    [0.08, -0.07, 0.85, -0.10, 0.25],
];

// Leads showing the infarct pattern: II, III, aVF, V1–V4.
const MI_LEADS: [usize; 7] = [1, 2, 5, 6, 7, 8, 9];

fn beat_template(class: DiagnosticClass, severity: f64, lead: usize, rr_s: f64) -> [Wave; 6] {
    let g = LEAD_GAINS[lead];
    let t_offset = 0.2 + 0.1 * rr_s;
    let mut p = Wave { amp: g[0], offset_s: -0.17, width_s: 0.025 };
    let mut q = Wave { amp: g[1] - 0.02, offset_s: -0.035, width_s: 0.010 };
    let mut r = Wave { amp: g[2], offset_s: 0.0, width_s: 0.011 };
    let mut s = Wave { amp: g[3], offset_s: 0.035, width_s: 0.011 };
    let mut t = Wave { amp: g[4], offset_s: t_offset, width_s: 0.05 };
    let mut st = Wave { amp: 0.0, offset_s: 0.11, width_s: 0.045 };
    match class {
        DiagnosticClass::Norm => {}
        DiagnosticClass::Mi => {
            if MI_LEADS.contains(&lead) {
                q.amp -= 0.35 * severity;
                q.width_s *= 1.0 + 0.5 * severity;
                t.amp *= 1.0 - 1.6 * severity;
            }
        }
        DiagnosticClass::Sttc => {
            st.amp = -0.15 * severity * g[2].signum() * g[2].abs().max(0.3);
            t.amp *= 1.0 - 0.7 * severity;
        }
        DiagnosticClass::Cd => {
            let widen = 1.0 + 1.2 * severity;
            q.width_s *= widen;
            r.width_s *= widen;
            s.width_s *= widen;
            q.offset_s *= widen;
            s.offset_s *= widen;
            p.amp *= 1.0 - 0.3 * severity;
        }
        DiagnosticClass::Hyp => {
            r.amp *= 1.0 + 0.8 * severity;
            if lead == 6 || lead == 7 {
                s.amp *= 1.0 + 1.0 * severity;
            }
            t.amp *= 1.0 - 0.3 * severity;
        }
    }
    [p, q, r, s, t, st]
}

fn gaussian(t: f64, w: &Wave) -> f64 {
    let z = (t - w.offset_s) / w.width_s;
    w.amp * (-0.5 * z * z).exp()
}

fn synth_one(
    cfg: &SyntheticConfig,
    seed: u64,
    index: usize,
    class: DiagnosticClass,
) -> Result<SyntheticRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);

    let fs = cfg.sample_rate_hz;
    let n = (cfg.duration_s * fs).round() as usize;
    let bpm = rng.gen_range(cfg.heart_rate_bpm.0..=cfg.heart_rate_bpm.1);
    let rr = 60.0 / bpm;
    let severity = if class == DiagnosticClass::Norm {
        0.0
    } else {
        rng.gen_range(cfg.severity.0..=cfg.severity.1)
    };
    let lead_scale: Vec<f64> = (0..N_LEADS)
        .map(|_| 1.0 + cfg.amplitude_jitter * rng.sample::<f64, _>(StandardNormal))
        .map(|s| s.clamp(0.5, 1.5))
        .collect();

    // Beat times; R lands exactly on a sample.
    let mut peaks = Vec::new();
    let mut t = rng.gen_range(0.2..0.2 + rr);
    while t < cfg.duration_s - 0.05 {
        let idx = (t * fs).round() as usize;
        if idx < n {
            peaks.push(idx);
        }
        let jitter: f64 = rng.sample(StandardNormal);
        t += rr * (1.0 + cfg.rr_jitter * jitter).clamp(0.8, 1.2);
    }

    let templates: Vec<[Wave; 6]> = (0..N_LEADS)
        .map(|lead| beat_template(class, severity, lead, rr))
        .collect();

    let wander_f = rng.gen_range(0.15..0.4);
    let wander_phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut leads = Array2::zeros((N_LEADS, n));
    for lead in 0..N_LEADS {
        let mut white: Vec<f64> = (0..n + 2)
            .map(|_| cfg.noise_mv * rng.sample::<f64, _>(StandardNormal))
            .collect();
        // 3-point smoothing band-limits the noise.
        for i in 0..n {
            white[i] = (white[i] + white[i + 1] + white[i + 2]) / 3.0;
        }
        let lead_wander = cfg.wander_mv * (0.5 + 0.5 * (lead as f64 / N_LEADS as f64));
        for i in 0..n {
            let ts = i as f64 / fs;
            let mut v = 0.0;
            for &p in &peaks {
                let dt = ts - p as f64 / fs;
                if dt.abs() < 0.8 {
                    v += templates[lead].iter().map(|w| gaussian(dt, w)).sum::<f64>();
                }
            }
            v *= lead_scale[lead];
            v += lead_wander * (std::f64::consts::TAU * wander_f * ts + wander_phase).sin();
            leads[[lead, i]] = v + white[i];
        }
    }

    let record = EcgRecord::new(
        format!("synth{seed}_{index:05}"),
        format!("sp{seed}_{index:05}"),
        leads,
        fs,
        class,
        Some((index % 10) as u8 + 1),
    )?;
    Ok(SyntheticRecord { record, r_peaks: peaks })
}

/// Split `n` into per-class counts by largest remainder.
fn class_counts(n: usize, mix: &[f64; N_CLASSES]) -> [usize; N_CLASSES] {
    let raw: Vec<f64> = mix.iter().map(|p| p * n as f64).collect();
    let mut counts: [usize; N_CLASSES] = std::array::from_fn(|i| raw[i].floor() as usize);
    let mut rem: Vec<(usize, f64)> = raw.iter().enumerate().map(|(i, r)| (i, r - r.floor())).collect();
    rem.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let short = n - counts.iter().sum::<usize>();
    for &(i, _) in rem.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Generate `n_records` labelled records plus their programmed R-peaks.
/// Class counts follow `class_mix` exactly (largest remainder); folds cycle 1..=10.
pub fn generate_synthetic_with_truth(
    n_records: usize,
    class_mix: &[f64; N_CLASSES],
    seed: u64,
    cfg: &SyntheticConfig,
) -> Result<Vec<SyntheticRecord>> {
    if n_records == 0 {
        return Err(Error::invalid("n_records must be positive"));
    }
    if class_mix.iter().any(|p| !(p.is_finite() && *p >= 0.0))
        || (class_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::invalid("class proportions must be nonnegative and sum to 1"));
    }
    if !(cfg.sample_rate_hz > 0.0 && cfg.duration_s > 0.0) {
        return Err(Error::invalid("sample rate and duration must be positive"));
    }
    let counts = class_counts(n_records, class_mix);
    let mut labels: Vec<DiagnosticClass> = DiagnosticClass::ALL
        .iter()
        .flat_map(|&c| std::iter::repeat(c).take(counts[c.index()]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);

    par::map_range(n_records, |i| synth_one(cfg, seed, i, labels[i]))
        .into_iter()
        .collect()
}

pub fn generate_synthetic_ecg(
    n_records: usize,
    class_mix: &[f64; N_CLASSES],
    seed: u64,
    cfg: &SyntheticConfig,
) -> Result<Vec<EcgRecord>> {
    Ok(generate_synthetic_with_truth(n_records, class_mix, seed, cfg)?
        .into_iter()
        .map(|s| s.record)
        .collect())
}
