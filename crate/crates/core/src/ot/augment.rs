//! Class rebalancing: plan how many beats each minority class needs, then
//! produce them by transporting batches of source-class beats onto batches
//! of target-class beats.

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{barycentric_map, cost_matrix, sinkhorn, EmpiricalMeasure, SinkhornConfig};
use crate::class::DiagnosticClass;
use crate::error::{Error, Result};
use crate::ingest::DatasetStats;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentTask {
    pub source: DiagnosticClass,
    pub target: DiagnosticClass,
    pub n_synthetic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub source_class: DiagnosticClass,
    pub batch_size: usize,
    /// `γ = gamma_scale · mean(C)` per batch.
    pub gamma_scale: f64,
    pub sinkhorn: SinkhornConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            source_class: DiagnosticClass::Norm,
            batch_size: 64,
            gamma_scale: 0.05,
            sinkhorn: SinkhornConfig::default(),
        }
    }
}

/// Deficit of every other class relative to the largest class. Classes that
/// already match or exceed it get nothing. Warns when the configured source
/// is not the largest class.
pub fn plan_augmentation(stats: &DatasetStats, cfg: &AugmentConfig) -> Vec<AugmentTask> {
    let top = stats.beats.iter().copied().max().unwrap_or(0);
    let source_count = stats.beat_count(cfg.source_class);
    if source_count < top {
        log::warn!(
            "source class {} ({source_count} beats) is not the majority ({top} beats)",
            cfg.source_class
        );
    }
    DiagnosticClass::ALL
        .iter()
        .filter(|&&c| c != cfg.source_class)
        .filter_map(|&c| {
            let deficit = top.saturating_sub(stats.beat_count(c));
            (deficit > 0).then_some(AugmentTask {
                source: cfg.source_class,
                target: c,
                n_synthetic: deficit,
            })
        })
        .collect()
}

/// One transported beat and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBeat {
    pub values: Vec<f64>,
    /// Row of the source matrix that was mapped.
    pub source_index: usize,
    pub batch: usize,
    pub batch_seed: u64,
    pub gamma: f64,
    pub marginal_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub batches_run: usize,
    pub batches_retried: usize,
    pub batches_skipped: usize,
    pub rows_dropped: usize,
}

struct BatchOutput {
    beats: Vec<SyntheticBeat>,
    retried: bool,
    skipped: bool,
    dropped: usize,
}

fn run_batch(
    source: &Array2<f64>,
    target: &Array2<f64>,
    cfg: &AugmentConfig,
    batch: usize,
    batch_seed: u64,
) -> Result<BatchOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(batch_seed);
    let src_idx = sample(&mut rng, source.nrows(), cfg.batch_size.min(source.nrows())).into_vec();
    let tgt_idx = sample(&mut rng, target.nrows(), cfg.batch_size.min(target.nrows())).into_vec();
    let src = EmpiricalMeasure::uniform(source.select(Axis(0), &src_idx))?;
    let tgt = EmpiricalMeasure::uniform(target.select(Axis(0), &tgt_idx))?;
    let cost = cost_matrix(&src, &tgt)?;
    let mean = cost.mean();
    let base_gamma = if mean > 0.0 { cfg.gamma_scale * mean } else { 1.0 };
    let p_s = src.masses().to_vec();
    let p_t = tgt.masses().to_vec();

    let mut plan = sinkhorn(&cost, &p_s, &p_t, base_gamma, &cfg.sinkhorn)?;
    let mut retried = false;
    if !plan.converged {
        retried = true;
        plan = sinkhorn(&cost, &p_s, &p_t, 2.0 * base_gamma, &cfg.sinkhorn)?;
        if !plan.converged {
            log::warn!(
                "batch {batch}: Sinkhorn did not converge (marginal error {:.3e}); skipped",
                plan.marginal_error
            );
            return Ok(BatchOutput { beats: Vec::new(), retried, skipped: true, dropped: 0 });
        }
    }
    let mapped = barycentric_map(&plan, &tgt)?;
    let beats = mapped
        .kept
        .iter()
        .zip(mapped.points.rows())
        .map(|(&row, point)| SyntheticBeat {
            values: point.to_vec(),
            source_index: src_idx[row],
            batch,
            batch_seed,
            gamma: plan.gamma,
            marginal_error: plan.marginal_error,
        })
        .collect();
    Ok(BatchOutput { beats, retried, skipped: false, dropped: mapped.dropped.len() })
}

/// Produce `n_needed` synthetic target-class beats from `source` rows
/// (`n × d`, flattened beats) transported onto `target` rows.
///
/// Batch seeds come from one stream seeded by `seed`, so the output is
/// identical for any thread count. Independent batches run in parallel.
pub fn augment_class(
    source: &Array2<f64>,
    target: &Array2<f64>,
    n_needed: usize,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<(Vec<SyntheticBeat>, AugmentReport)> {
    let mut report = AugmentReport::default();
    if n_needed == 0 {
        return Ok((Vec::new(), report));
    }
    if source.nrows() == 0 || target.nrows() == 0 {
        return Err(Error::invalid("augmentation needs non-empty source and target classes"));
    }
    if source.ncols() != target.ncols() {
        return Err(Error::invalid("source and target beats differ in length"));
    }
    if cfg.batch_size == 0 || !(cfg.gamma_scale > 0.0) {
        return Err(Error::invalid("batch size and gamma scale must be positive"));
    }
    let per_batch = cfg.batch_size.min(source.nrows());
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_needed);
    let mut next_batch = 0usize;

    while out.len() < n_needed {
        let remaining = n_needed - out.len();
        let round = remaining.div_ceil(per_batch);
        let jobs: Vec<(usize, u64)> = (0..round)
            .map(|k| (next_batch + k, seeds.next_u64()))
            .collect();
        next_batch += round;
        let results = par::map(&jobs, |&(b, s)| run_batch(source, target, cfg, b, s));
        let before = out.len();
        for r in results {
            let r = r?;
            report.batches_run += 1;
            report.batches_retried += usize::from(r.retried);
            report.batches_skipped += usize::from(r.skipped);
            report.rows_dropped += r.dropped;
            let take = (n_needed - out.len()).min(r.beats.len());
            out.extend(r.beats.into_iter().take(take));
        }
        if out.len() == before {
            return Err(Error::AugmentationStalled(format!(
                "a round of {round} batches produced no beats"
            )));
        }
    }
    Ok((out, report))
}
