use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ecgot_core::dsp::{preprocess_record, DspConfig};
use ecgot_core::features::{assemble_all, FeatureConfig};
use ecgot_core::ingest::{generate_synthetic_ecg, SyntheticConfig};
use ecgot_core::model::{loss_and_gradients, ModelConfig, ModelParams};
use ecgot_core::ot::{augment_class, AugmentConfig};
use ecgot_core::par;
use ndarray::Array2;

fn beats() -> Vec<ecgot_core::dsp::Beat> {
    let recs = generate_synthetic_ecg(40, &[0.2; 5], 1, &SyntheticConfig::default()).unwrap();
    recs.iter()
        .flat_map(|r| preprocess_record(r, &DspConfig::default()).unwrap().beats)
        .collect()
}

fn matrix(rows: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_vec((rows.len(), rows[0].len()), rows.concat()).unwrap()
}

fn in_mode<R: Send>(mode: &str, f: impl FnOnce() -> R + Send) -> R {
    if mode == "sequential" {
        par::sequential(f)
    } else {
        f()
    }
}

fn bench(c: &mut Criterion) {
    let beats = beats();
    let feature_cfg = FeatureConfig::default();
    let flat: Vec<Vec<f64>> = beats.iter().map(|b| b.flatten()).collect();
    let half = flat.len() / 2;
    let source = matrix(&flat[..half]);
    let target = matrix(&flat[half..]);
    let aug_cfg = AugmentConfig::default();

    let features: Vec<Vec<f64>> = assemble_all(&beats, &feature_cfg)
        .into_iter()
        .filter_map(|r| r.ok().map(|v| v.values))
        .take(256)
        .collect();
    let x = matrix(&features);
    let labels: Vec<usize> = (0..x.nrows()).map(|i| i % 5).collect();
    let model = ModelConfig { d_model: 16, n_layers: 1, n_heads: 2, d_k: 8, d_v: 8, d_ff: 32, conv_channels: 16, ..Default::default() };
    let params = ModelParams::init(&model, 0).unwrap();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for mode in ["parallel", "sequential"] {
        group.bench_function(BenchmarkId::new("features", mode), |b| {
            b.iter(|| in_mode(mode, || assemble_all(&beats, &feature_cfg)))
        });
        group.bench_function(BenchmarkId::new("augment", mode), |b| {
            b.iter(|| in_mode(mode, || augment_class(&source, &target, 256, &aug_cfg, 3).unwrap()))
        });
        group.bench_function(BenchmarkId::new("gradients", mode), |b| {
            b.iter(|| in_mode(mode, || loss_and_gradients(&x, &labels, &params).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
