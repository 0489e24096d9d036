//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails. Oracles here are written independently
//! of the library code they check.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use ecgot_core::dsp::{detect_r_peaks, fft_magnitude, notch_filter, preprocess_record, DspConfig};
use ecgot_core::features::{freq_features, time_features, FreqConfig};
use ecgot_core::ingest::{generate_synthetic_ecg, generate_synthetic_with_truth, DatasetStats, SyntheticConfig};
use ecgot_core::model::{
    expected_shapes, forward, gradient_check, train, Dataset, ModelConfig, ModelParams, TrainConfig,
};
use ecgot_core::ot::{
    augment_class, barycentric_map, cost_matrix, exact_ot_small, plan_augmentation, sinkhorn, AugmentConfig,
    EmpiricalMeasure, SinkhornConfig,
};
use ecgot_core::pipeline::{digest_beats, preprocess_records, run_split, split_beats, PipelineConfig, RunDigests, Strategy};
use ecgot_core::DiagnosticClass;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| shift + rng.gen_range(-1.0..1.0))
}

fn random_masses(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Optimal transport cost by a generic LP solver.
fn lp_transport_cost(cost: &Array2<f64>, p_s: &[f64], p_t: &[f64]) -> f64 {
    let (n, m) = cost.dim();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = (0..n)
        .map(|i| (0..m).map(|j| lp.add_var(cost[[i, j]], (0.0, f64::INFINITY))).collect())
        .collect();
    for i in 0..n {
        let row: Vec<_> = (0..m).map(|j| (vars[i][j], 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, p_s[i]);
    }
    for j in 0..m {
        let col: Vec<_> = (0..n).map(|i| (vars[i][j], 1.0)).collect();
        lp.add_constraint(col.as_slice(), ComparisonOp::Eq, p_t[j]);
    }
    lp.solve().expect("transport LP is feasible").objective()
}

fn ot_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SinkhornConfig { max_iter: 200_000, tol: 1e-9 };
    let (mut worst_gap, mut worst_marg, mut worst_lp) = (0.0f64, 0.0f64, 0.0f64);
    let mut solve_time = Duration::ZERO;
    for _ in 0..200 {
        let (n, m, d) = (rng.gen_range(2..=8), rng.gen_range(2..=8), rng.gen_range(1..=5));
        let src = EmpiricalMeasure::weighted(random_points(&mut rng, n, d, 0.0), random_masses(&mut rng, n)).unwrap();
        let tgt = EmpiricalMeasure::weighted(random_points(&mut rng, m, d, 0.5), random_masses(&mut rng, m)).unwrap();
        let cost = cost_matrix(&src, &tgt).unwrap();
        let (p_s, p_t) = (src.masses().to_vec(), tgt.masses().to_vec());
        let t = Instant::now();
        let plan = sinkhorn(&cost, &p_s, &p_t, 0.01 * cost.mean(), &cfg).unwrap();
        let exact = exact_ot_small(&cost, &p_s, &p_t).unwrap();
        solve_time += t.elapsed();
        let optimum = exact.transport_cost(&cost);
        worst_lp = worst_lp.max(rel_err(optimum, lp_transport_cost(&cost.0, &p_s, &p_t)));
        worst_gap = worst_gap.max((plan.transport_cost(&cost) - optimum) / optimum);
        worst_marg = worst_marg.max(plan.marginal_violation(&p_s, &p_t));
    }
    let pass = worst_gap <= 0.05 && worst_marg < 1e-6 && worst_lp <= 1e-9 && solve_time.as_secs_f64() < 5.0;
    outcome(
        pass,
        format!(
            "200 instances: max cost gap {:.3}%, max marginal violation {worst_marg:.1e}, exact vs LP {worst_lp:.1e}, {:.2}s",
            100.0 * worst_gap,
            solve_time.as_secs_f64()
        ),
    )
}

/// Distance from `y` to the convex hull of the rows of `points`: solves
/// min Σ|r| s.t. Σ λ_j t_j + r = y, Σ λ = 1, λ ≥ 0, then re-evaluates the
/// residual directly from λ.
fn hull_residual(points: &Array2<f64>, y: &[f64]) -> f64 {
    let (m, d) = points.dim();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let lambda: Vec<_> = (0..m).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for k in 0..d {
        let plus = lp.add_var(1.0, (0.0, f64::INFINITY));
        let minus = lp.add_var(1.0, (0.0, f64::INFINITY));
        let mut row: Vec<_> = (0..m).map(|j| (lambda[j], points[[j, k]])).collect();
        row.push((plus, 1.0));
        row.push((minus, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, y[k]);
    }
    let ones: Vec<_> = lambda.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let sol = lp.solve().expect("hull LP is feasible");
    let l: Vec<f64> = lambda.iter().map(|&v| sol[v].max(0.0)).collect();
    let sum: f64 = l.iter().sum();
    let mut worst = (sum - 1.0).abs();
    for k in 0..d {
        let combo: f64 = (0..m).map(|j| l[j] * points[[j, k]]).sum();
        worst = worst.max((combo - y[k]).abs());
    }
    worst
}

fn convex_hull() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SinkhornConfig { max_iter: 20_000, tol: 1e-9 };
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    while checked < 1000 {
        let tgt = EmpiricalMeasure::uniform(random_points(&mut rng, 30, 6, 2.0)).unwrap();
        let src = EmpiricalMeasure::uniform(random_points(&mut rng, 50, 6, 0.0)).unwrap();
        let cost = cost_matrix(&src, &tgt).unwrap();
        let plan = sinkhorn(&cost, &src.masses().to_vec(), &tgt.masses().to_vec(), 0.05 * cost.mean(), &cfg).unwrap();
        let mapped = barycentric_map(&plan, &tgt).unwrap();
        for row in mapped.points.rows() {
            if checked == 1000 {
                break;
            }
            worst = worst.max(hull_residual(tgt.points(), row.as_slice().unwrap()));
            checked += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{checked} mapped points, max hull residual {worst:.1e}"))
}

fn class_beats(class: DiagnosticClass, n_records: usize, seed: u64, limit: usize) -> Array2<f64> {
    let mut mix = [0.0; 5];
    mix[class.index()] = 1.0;
    let recs = generate_synthetic_ecg(n_records, &mix, seed, &SyntheticConfig::default()).unwrap();
    let (beats, _) = preprocess_records(&recs, &DspConfig::default());
    let rows: Vec<Vec<f64>> = beats.iter().take(limit).map(|b| b.flatten()).collect();
    let d = rows[0].len();
    Array2::from_shape_vec((rows.len(), d), rows.concat()).unwrap()
}

fn self_transport() -> Outcome {
    let x = class_beats(DiagnosticClass::Mi, 8, 3, 64);
    let cfg = AugmentConfig {
        gamma_scale: 1e-3,
        sinkhorn: SinkhornConfig { max_iter: 50_000, tol: 1e-6 },
        ..Default::default()
    };
    let (synth, report) = augment_class(&x, &x, 128, &cfg, 11).unwrap();
    let n = x.nrows();
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            pair_sum += sq_dist(x.row(i).as_slice().unwrap(), x.row(j).as_slice().unwrap()).sqrt();
            pairs += 1;
        }
    }
    let mean_pair = pair_sum / pairs as f64;
    let mean_disp = synth
        .iter()
        .map(|s| {
            x.rows()
                .into_iter()
                .map(|r| sq_dist(&s.values, r.as_slice().unwrap()).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / synth.len() as f64;
    let ratio = mean_disp / mean_pair;
    outcome(
        ratio < 0.05 && synth.len() == 128,
        format!(
            "{} beats ({} skipped batches): displacement {:.2e} is {:.3}% of mean pair distance {:.3}",
            synth.len(),
            report.batches_skipped,
            mean_disp,
            100.0 * ratio,
            mean_pair
        ),
    )
}

// Direct-summation definitions of the 16 time and 10 frequency statistics.
fn oracle_time(x: &[f64]) -> [f64; 16] {
    let n = x.len() as f64;
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = sorted[sorted.len() - 1];
    let min = sorted[0];
    let mean = x.iter().sum::<f64>() / n;
    let k = sorted.len();
    let median = if k % 2 == 0 { (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0 } else { sorted[k / 2] };
    let width = (max - min) / 64.0;
    let mut best = (0usize, 0usize);
    for bin in 0..64 {
        let lo = min + bin as f64 * width;
        let hi = min + (bin + 1) as f64 * width;
        let count = x.iter().filter(|&&v| v >= lo && (v < hi || (bin == 63 && v <= max))).count();
        if count > best.1 {
            best = (bin, count);
        }
    }
    let mode = min + (best.0 as f64 + 0.5) * width;
    let moment = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let var = moment(2);
    let sd = var.sqrt();
    let ms = x.iter().map(|v| v * v).sum::<f64>() / n;
    let rms = ms.sqrt();
    let skew = moment(3) / sd.powi(3);
    let kurt = moment(4) / var.powi(2);
    let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / n;
    let peak = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let root = (x.iter().map(|v| v.abs().sqrt()).sum::<f64>() / n).powi(2);
    [
        max,
        min,
        max - min,
        mean,
        median,
        mode,
        sd,
        rms,
        ms,
        moment(3),
        skew,
        kurt,
        kurt / (ms * ms),
        rms / mean_abs,
        peak / mean_abs,
        peak / root,
    ]
}

fn oracle_dft(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let angle = 2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

fn oracle_freq(mags: &[f64], freqs: &[f64]) -> [f64; 10] {
    let n = mags.len() as f64;
    let total: f64 = mags.iter().sum();
    let z1 = total / n;
    let z2 = mags.iter().map(|m| (m - z1).powi(2)).sum::<f64>() / (n - 1.0);
    let mut z3 = 0.0;
    for m in mags {
        let p = m / (z1 * n);
        if p > 0.0 {
            z3 -= p * p.log2();
        }
    }
    let z4 = mags.iter().map(|m| m * m).sum::<f64>() / n;
    let sd = z2.sqrt();
    let z5 = mags.iter().map(|m| ((m - z1) / sd).powi(3)).sum::<f64>() / n;
    let z6 = mags.iter().map(|m| ((m - z1) / sd).powi(4)).sum::<f64>() / n;
    let pairs = || freqs.iter().zip(mags);
    let z7 = pairs().map(|(f, m)| f - m).sum::<f64>() / total;
    let z8 = (pairs().map(|(f, m)| (f - z6).powi(2) * m).sum::<f64>() / total).sqrt();
    let z9 = pairs().map(|(f, m)| (f - m).powi(3) * m).sum::<f64>() / total;
    let z10 = pairs().map(|(f, m)| (f - m).powi(4) * m).sum::<f64>() / total;
    [z1, z2, z3, z4, z5, z6, z7, z8, z9, z10]
}

fn feature_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let beats = class_beats(DiagnosticClass::Sttc, 6, 5, 500);
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    for i in 0..1000 {
        let x: Vec<f64> = if i % 2 == 0 {
            beats.row(i / 2 % beats.nrows()).iter().take(60).copied().collect()
        } else {
            let len = rng.gen_range(8..=90);
            (0..len).map(|_| rng.gen_range(-2.0..2.5)).collect()
        };
        let got_t = time_features(&x).unwrap().to_array();
        let want_t = oracle_time(&x);
        let spectrum = fft_magnitude(&x, 100.0).unwrap();
        let freqs: Vec<f64> = (0..=x.len() / 2).map(|k| k as f64 * 100.0 / x.len() as f64).collect();
        let got_f = freq_features(&spectrum, &FreqConfig::default()).unwrap().z;
        let want_f = oracle_freq(&oracle_dft(&x), &freqs);
        for (k, (g, w)) in got_t.iter().chain(&got_f).zip(want_t.iter().chain(&want_f)).enumerate() {
            let e = rel_err(*g, *w);
            if e > worst {
                worst = e;
                worst_name = format!("feature {k} on input {i}");
            }
        }
    }
    outcome(worst <= 1e-9, format!("26 features x 1000 inputs, max relative error {worst:.1e} ({worst_name})"))
}

fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|t| (2.0 * std::f64::consts::PI * freq * t as f64 / fs).sin()).collect()
}

fn middle_rms(x: &[f64]) -> f64 {
    let core = &x[x.len() / 4..3 * x.len() / 4];
    (core.iter().map(|v| v * v).sum::<f64>() / core.len() as f64).sqrt()
}

fn dsp_checks() -> Outcome {
    let fs = 500.0;
    let n = 5000;
    let gain_db = |f: f64| {
        let x = tone(f, fs, n);
        let y = notch_filter(&x, fs, 50.0, 30.0).unwrap();
        20.0 * (middle_rms(&y) / middle_rms(&x)).log10()
    };
    let (att50, att5) = (gain_db(50.0), gain_db(5.0));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut parseval = 0.0f64;
    for len in [59usize, 60, 61, 128, 1000] {
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let time: f64 = x.iter().map(|v| v * v).sum();
        parseval = parseval.max(rel_err(time, fft_magnitude(&x, fs).unwrap().energy()));
    }

    let recs = generate_synthetic_with_truth(500, &[0.2; 5], 31, &SyntheticConfig::default()).unwrap();
    let cfg = DspConfig::default();
    let tol = |fs: f64| (0.03 * fs).round() as usize;
    let (mut tp, mut n_true, mut n_found) = (0usize, 0usize, 0usize);
    for s in &recs {
        let p = preprocess_record(&s.record, &cfg).unwrap();
        let found = &p.r_peaks;
        let t = tol(s.record.sample_rate_hz);
        let mut used = vec![false; found.len()];
        for &r in &s.r_peaks {
            if let Some(k) = (0..found.len()).find(|&k| !used[k] && found[k].abs_diff(r) <= t) {
                used[k] = true;
                tp += 1;
            }
        }
        n_true += s.r_peaks.len();
        n_found += found.len();
    }
    let (sens, prec) = (tp as f64 / n_true as f64, tp as f64 / n_found as f64);
    // The detector is also run on lead II directly to make sure the preprocessed
    // path is not the only one exercised.
    let direct = detect_r_peaks(&recs[0].record.lead(1), recs[0].record.sample_rate_hz).unwrap();
    let pass = att50 <= -20.0 && att5 > -1.0 && parseval <= 1e-9 && sens >= 0.99 && prec >= 0.99 && !direct.is_empty();
    outcome(
        pass,
        format!(
            "notch 50 Hz {att50:.1} dB, 5 Hz {att5:.3} dB; Parseval {parseval:.1e}; R-peaks sensitivity {:.2}% precision {:.2}% ({n_true} true)",
            100.0 * sens,
            100.0 * prec
        ),
    )
}

fn tiny_model() -> ModelConfig {
    ModelConfig {
        input_len: 24,
        seq_len: 6,
        d_model: 8,
        n_layers: 2,
        n_heads: 2,
        d_k: 4,
        d_v: 4,
        d_ff: 16,
        n_classes: 5,
        dropout: 0.0,
        conv_kernel: 3,
        conv_channels: 6,
    }
}

fn model_math() -> Outcome {
    let t = Instant::now();
    let cfg = tiny_model();
    let params = ModelParams::init(&cfg, 13).unwrap();
    let n_params = params.num_params();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = Array2::from_shape_fn((7, cfg.input_len), |_| rng.gen_range(-1.5..1.5));
    let labels = [0, 1, 2, 3, 4, 2, 0];
    let checks = gradient_check(&params, &x, &labels, 1e-5).unwrap();
    let worst = checks.iter().map(|c| c.relative_error).fold(0.0, f64::max);

    let probs = forward(&x, &params).unwrap();
    let row_sum = probs.rows().into_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);

    // Shapes stated for the attention projections, built here independently.
    let (d, h) = (cfg.d_model, cfg.n_heads);
    let mut audit = true;
    for layer in &params.layers {
        audit &= layer.w_query.len() == h && layer.w_key.len() == h && layer.w_value.len() == h;
        for i in 0..h {
            audit &= layer.w_query[i].dim() == (d, cfg.d_k);
            audit &= layer.w_key[i].dim() == (d, cfg.d_k);
            audit &= layer.w_value[i].dim() == (d, cfg.d_v);
        }
        audit &= layer.w_out.dim() == (h * cfg.d_v, d);
    }
    let declared = expected_shapes(&cfg);
    let actual: Vec<(String, Vec<usize>)> = params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    audit &= declared == actual && params.audit_shapes().is_ok();
    let secs = t.elapsed().as_secs_f64();
    let pass = n_params <= 5000 && worst <= 1e-4 && checks.len() == actual.len() && row_sum <= 1e-6 && audit && secs < 60.0;
    outcome(
        pass,
        format!(
            "{n_params} params, {} tensors, worst gradient relative error {worst:.1e}, softmax row error {row_sum:.1e}, shape audit {}, {secs:.1}s",
            checks.len(),
            if audit { "ok" } else { "FAILED" }
        ),
    )
}

fn learnability() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (per_class, dim) = (200usize, 672usize);
    let mut x = Array2::zeros((3 * per_class, dim));
    let mut y = Vec::with_capacity(3 * per_class);
    for c in 0..3 {
        for i in 0..per_class {
            let r = c * per_class + i;
            for j in 0..dim {
                let centre = if (j / 8) % 3 == c { 1.0 } else { 0.0 };
                x[[r, j]] = centre + rng.gen_range(-0.5..0.5);
            }
            y.push(c);
        }
    }
    let data = Dataset::new(x, y).unwrap();
    let model = ModelConfig {
        d_model: 16,
        n_layers: 1,
        n_heads: 2,
        d_k: 8,
        d_v: 8,
        d_ff: 32,
        n_classes: 3,
        dropout: 0.0,
        conv_channels: 16,
        ..ModelConfig::default()
    };
    let cfg = TrainConfig { epochs: 50, batch_size: 32, learning_rate: 2e-3, seed: 3, ..Default::default() };
    let (_, log) = train(&data, &data, &model, &cfg).unwrap();
    let first = log.epochs.iter().find(|e| e.val_accuracy >= 0.95).map(|e| e.epoch);
    let best = log.epochs.iter().map(|e| e.val_accuracy).fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        first.is_some() && secs < 300.0,
        format!(
            "600 rows, train accuracy reached 95% at epoch {}, best {:.3}, {secs:.1}s",
            first.map_or("never".into(), |e| e.to_string()),
            best
        ),
    )
}

fn desk_config() -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn desk_study() -> Outcome {
    let t = Instant::now();
    let minority = &DiagnosticClass::ALL[1..];
    let mut ot_wins = 0;
    let mut gains = Vec::new();
    let mut lines = Vec::new();
    for seed in 1..=10u64 {
        let mut cfg = desk_config();
        cfg.synthetic.seed = seed;
        cfg.run.seed = seed;
        cfg.train.seed = seed;
        let s = &cfg.synthetic;
        let records = generate_synthetic_ecg(s.n_records, &s.class_mix, s.seed, &s.generator).unwrap();
        let (beats, _) = preprocess_records(&records, &cfg.dsp);
        let split = split_beats(beats, &cfg.split, seed).unwrap();
        let digests = RunDigests {
            config: cfg.digest(),
            records: String::new(),
            test: digest_beats(&split.test),
            train_before_augmentation: digest_beats(&split.train),
        };
        let mut scores = Vec::new();
        for strategy in Strategy::ALL {
            cfg.run.strategy = strategy;
            let m = run_split(split.clone(), &cfg, digests.clone(), None).unwrap().metrics.metrics();
            scores.push((m.macro_f1, m.mean_recall(minority)));
        }
        let (none, over, ot) = (scores[0], scores[1], scores[2]);
        ot_wins += usize::from(ot.0 >= none.0);
        gains.push(ot.1 - none.1);
        lines.push(format!(
            "    seed {seed:2}: macro F1 none {:.3} oversample {:.3} ot {:.3}; minority recall none {:.3} oversample {:.3} ot {:.3}",
            none.0, over.0, ot.0, none.1, over.1, ot.1
        ));
    }
    let gain = gains.iter().sum::<f64>() / gains.len() as f64;
    let secs = t.elapsed().as_secs_f64();
    for l in &lines {
        println!("{l}");
    }
    outcome(
        ot_wins >= 8 && gain >= 0.05 && secs < 1800.0,
        format!(
            "ot macro F1 >= none in {ot_wins}/10 seeds, mean minority recall gain {:+.1} points, {:.1} min",
            100.0 * gain,
            secs / 60.0
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("tiny.toml");
    std::fs::write(
        &cfg_path,
        "[synthetic]\nn_records = 120\n[run]\nstrategy = \"ot\"\nseed = 5\n\
         [split]\ntrain_beat_limits = [100, 20, 20, 20, 20]\ntest_beat_limits = [20, 20, 20, 20, 20]\n\
         [model]\nd_model = 8\nn_layers = 1\nn_heads = 2\nd_k = 4\nd_v = 4\nd_ff = 16\nconv_channels = 8\n\
         [train]\nepochs = 3\nbatch_size = 32\nseed = 5\n",
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_ecgot");
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let ok_a = Command::new(bin)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&first)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .unwrap()
        .success();
    let snapshot = first.join("ot-seed5/config.toml");
    let ok_b = Command::new(bin)
        .env("RAYON_NUM_THREADS", "3")
        .args(["run", "--config"])
        .arg(&snapshot)
        .arg("--out")
        .arg(&second)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .unwrap()
        .success();
    let a = std::fs::read(first.join("ot-seed5/metrics.json")).unwrap_or_default();
    let b = std::fs::read(second.join("ot-seed5/metrics.json")).unwrap_or_default();
    outcome(
        ok_a && ok_b && !a.is_empty() && a == b,
        format!("rerun from config snapshot on 3 threads: metrics JSON {} ({} bytes)", if a == b { "identical" } else { "differs" }, a.len()),
    )
}

fn plan_arithmetic() -> Outcome {
    let stats = DatasetStats::from_beat_counts([28419, 10959, 8906, 20955, 8342]);
    let plan = plan_augmentation(&stats, &AugmentConfig::default());
    let got: Vec<(DiagnosticClass, usize)> = plan.iter().map(|t| (t.target, t.n_synthetic)).collect();
    let want = vec![
        (DiagnosticClass::Mi, 28419 - 10959),
        (DiagnosticClass::Sttc, 28419 - 8906),
        (DiagnosticClass::Cd, 28419 - 20955),
        (DiagnosticClass::Hyp, 28419 - 8342),
    ];
    let source_ok = plan.iter().all(|t| t.source == DiagnosticClass::Norm);
    outcome(got == want && got[0].1 == 17460 && source_ok, format!("deficits {got:?}"))
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("ot-correctness", ot_correctness),
        ("convex-hull", convex_hull),
        ("self-transport", self_transport),
        ("feature-oracles", feature_oracles),
        ("dsp", dsp_checks),
        ("model-math", model_math),
        ("learnability", learnability),
        ("plan-arithmetic", plan_arithmetic),
        ("determinism", determinism),
        ("desk-imbalance-study", desk_study),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!result.pass);
        println!(
            "{} {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
