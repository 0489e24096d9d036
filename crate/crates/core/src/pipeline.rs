//! End-to-end run: preprocess → split → augment → features → train → eval.
//!
//! Artifacts are written stage by stage so a failed run leaves whatever it
//! finished on disk.

use std::fmt;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::class::{DiagnosticClass, N_CLASSES};
use crate::dsp::archive::write_beats;
use crate::dsp::{preprocess_record, Beat, DspConfig};
use crate::error::{Error, Result};
use crate::eval::{confusion, confusion_heatmap_svg, digest_dataset, metrics, oversample, RunMetrics};
use crate::features::{assemble_all, FeatureConfig};
use crate::ingest::{DatasetStats, EcgRecord, SyntheticConfig, TEST_FOLD};
use crate::model::{predict, save_checkpoint, train, Dataset, ModelConfig, ModelParams, Standardizer, TrainConfig, TrainingLog};
use crate::ot::{augment_class, plan_augmentation, AugmentConfig, AugmentReport};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    None,
    Oversample,
    Ot,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::None, Strategy::Oversample, Strategy::Ot];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Oversample => "oversample",
            Strategy::Ot => "ot",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?} (none, oversample, ot)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data_root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { data_root: None, manifest: None, output_dir: PathBuf::from("runs") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub n_records: usize,
    pub class_mix: [f64; N_CLASSES],
    pub seed: u64,
    pub generator: SyntheticConfig,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self { n_records: 1000, class_mix: [0.2; N_CLASSES], seed: 1, generator: SyntheticConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Defaults to `<strategy>-seed<seed>`.
    pub run_id: Option<String>,
    pub strategy: Strategy,
    /// Drives beat subsampling, augmentation and oversampling. Model
    /// initialization, shuffling and dropout use `train.seed`.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Fold held out of the training folds for model selection.
    pub validation_fold: u8,
    /// Per-class caps on beats from folds 1–9, applied before the
    /// validation fold is separated.
    pub train_beat_limits: Option<[usize; N_CLASSES]>,
    pub test_beat_limits: Option<[usize; N_CLASSES]>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { validation_fold: 9, train_beat_limits: None, test_beat_limits: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Classes averaged for the minority-recall summary.
    pub minority_classes: Vec<DiagnosticClass>,
    pub heatmap: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { minority_classes: DiagnosticClass::ALL[1..].to_vec(), heatmap: true }
    }
}

/// Everything a run needs, loadable from one declarative file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub synthetic: SyntheticSection,
    pub run: RunSection,
    pub split: SplitConfig,
    pub dsp: DspConfig,
    pub features: FeatureConfig,
    pub augment: AugmentConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn run_id(&self) -> String {
        self.run.run_id.clone().unwrap_or_else(|| format!("{}-seed{}", self.run.strategy, self.run.seed))
    }

    /// Digest of the experiment settings. Paths are excluded so the same
    /// experiment written elsewhere keeps its digest.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.paths = PathsConfig::default();
        let json = serde_json::to_vec(&c).expect("config serializes");
        crate::eval::digest_bytes(&json)
    }

    /// The model input length must match the feature layout.
    pub fn validate(&self) -> Result<()> {
        let want = self.features.vector_len(self.dsp.window_samples);
        if self.model.input_len != want {
            return Err(Error::invalid(format!(
                "model.input_len is {} but the feature vector has {want} values",
                self.model.input_len
            )));
        }
        if !(1..=9).contains(&self.split.validation_fold) {
            return Err(Error::invalid("validation_fold must be one of the training folds 1-9"));
        }
        self.model.validate()?;
        self.train.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Preprocess,
    Split,
    Augment,
    Features,
    Train,
    Eval,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Ingest => "ingest",
            Stage::Preprocess => "preprocess",
            Stage::Split => "split",
            Stage::Augment => "augment",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {source}")]
pub struct StageFailure {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageFailure>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageFailure> {
        self.map_err(|source| StageFailure { stage, source })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub records: usize,
    pub failed_records: usize,
    pub beats: usize,
    pub beats_skipped_at_edges: usize,
    pub notch_skipped_records: usize,
}

/// Preprocess every record in parallel. Records whose R-peak detection or
/// filtering fails are skipped and counted.
pub fn preprocess_records(records: &[EcgRecord], dsp: &DspConfig) -> (Vec<Beat>, PreprocessSummary) {
    let results = par::map(records, |r| preprocess_record(r, dsp));
    let mut summary = PreprocessSummary { records: records.len(), ..Default::default() };
    let mut beats = Vec::new();
    for (rec, res) in records.iter().zip(results) {
        match res {
            Ok(p) => {
                summary.beats += p.beats.len();
                summary.beats_skipped_at_edges += p.report.skipped_at_edges;
                summary.notch_skipped_records += usize::from(!p.notch_applied);
                beats.extend(p.beats);
            }
            Err(e) => {
                log::warn!("record {} skipped: {e}", rec.record_id);
                summary.failed_records += 1;
            }
        }
    }
    (beats, summary)
}

#[derive(Debug, Clone, Default)]
pub struct SplitBeats {
    pub train: Vec<Beat>,
    pub validation: Vec<Beat>,
    pub test: Vec<Beat>,
}

fn class_counts<'a>(labels: impl Iterator<Item = &'a DiagnosticClass>) -> [usize; N_CLASSES] {
    let mut c = [0; N_CLASSES];
    for l in labels {
        c[l.index()] += 1;
    }
    c
}

fn cap_beats(beats: Vec<Beat>, limits: &[usize; N_CLASSES], rng: &mut ChaCha8Rng) -> Vec<Beat> {
    let mut by_class: Vec<Vec<Beat>> = vec![Vec::new(); N_CLASSES];
    for b in beats {
        by_class[b.label.index()].push(b);
    }
    let mut out = Vec::new();
    for (class, mut members) in by_class.into_iter().enumerate() {
        let limit = limits[class];
        if members.len() > limit {
            let mut keep = sample(rng, members.len(), limit).into_vec();
            keep.sort_unstable();
            let mut taken: Vec<Option<Beat>> = members.into_iter().map(Some).collect();
            members = keep.into_iter().map(|i| taken[i].take().expect("indices are distinct")).collect();
        } else if members.len() < limit {
            log::warn!(
                "class {} has {} beats, fewer than the limit {limit}",
                DiagnosticClass::ALL[class],
                members.len()
            );
        }
        out.extend(members);
    }
    out
}

/// Fold-based split: fold 10 tests, `validation_fold` validates, the rest
/// trains. Beats without a fold are dropped. Optional per-class caps are
/// drawn with `seed`.
pub fn split_beats(beats: Vec<Beat>, cfg: &SplitConfig, seed: u64) -> Result<SplitBeats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let (mut train_side, mut test): (Vec<Beat>, Vec<Beat>) =
        beats.into_iter().filter(|b| b.fold.is_some()).partition(|b| b.fold != Some(TEST_FOLD));
    if let Some(limits) = &cfg.train_beat_limits {
        train_side = cap_beats(train_side, limits, &mut rng);
    }
    if let Some(limits) = &cfg.test_beat_limits {
        test = cap_beats(test, limits, &mut rng);
    }
    let (validation, train): (Vec<Beat>, Vec<Beat>) =
        train_side.into_iter().partition(|b| b.fold == Some(cfg.validation_fold));
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if validation.is_empty() {
        return Err(Error::invalid(format!("validation fold {} has no beats", cfg.validation_fold)));
    }
    Ok(SplitBeats { train, validation, test })
}

/// One line of the augmentation provenance sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRow {
    pub synth_id: String,
    pub source_class: DiagnosticClass,
    pub target_class: DiagnosticClass,
    /// Record and R-peak sample of the source beat.
    pub source_id: String,
    pub seed: u64,
    pub gamma: f64,
    pub marginal_error: f64,
}

pub fn write_provenance(path: &Path, rows: &[ProvenanceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_provenance(path: &Path) -> Result<Vec<ProvenanceRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn beat_matrix(beats: &[&Beat]) -> Array2<f64> {
    let width = beats.first().map_or(0, |b| b.flatten().len());
    let mut m = Array2::zeros((beats.len(), width));
    for (mut row, b) in m.rows_mut().into_iter().zip(beats) {
        row.assign(&ndarray::ArrayView1::from(b.window.as_slice().expect("beat windows are contiguous")));
    }
    m
}

/// Transport source-class training beats onto every class short of the
/// majority. Returns the synthetic beats, their provenance and per-class
/// batch reports.
pub fn augment_beats(
    train: &[Beat],
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<(Vec<Beat>, Vec<ProvenanceRow>, Vec<(DiagnosticClass, AugmentReport)>)> {
    let counts = class_counts(train.iter().map(|b| &b.label));
    let stats = DatasetStats::from_beat_counts(counts);
    let tasks = plan_augmentation(&stats, cfg);
    let width = train.first().map_or(0, Beat::width);
    let source: Vec<&Beat> = train.iter().filter(|b| b.label == cfg.source_class).collect();
    let source_matrix = beat_matrix(&source);
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    seeds.set_stream(4);
    let mut beats = Vec::new();
    let mut provenance = Vec::new();
    let mut reports = Vec::new();
    for task in tasks {
        let class_seed = seeds.next_u64();
        let target: Vec<&Beat> = train.iter().filter(|b| b.label == task.target).collect();
        if target.is_empty() || source.is_empty() {
            log::warn!("no {} or {} beats to transport between; skipped", task.source, task.target);
            continue;
        }
        let (synth, report) = augment_class(&source_matrix, &beat_matrix(&target), task.n_synthetic, cfg, class_seed)?;
        for s in synth {
            let synth_id = format!("synth-{}-{:06}", task.target.name(), beats.len());
            let src = source[s.source_index];
            let mut beat = Beat::from_flat(&s.values, width, synth_id.clone(), task.target)?;
            beat.fold = src.fold;
            provenance.push(ProvenanceRow {
                synth_id,
                source_class: task.source,
                target_class: task.target,
                source_id: format!("{}@{}", src.source_record, src.record_offset),
                seed: s.batch_seed,
                gamma: s.gamma,
                marginal_error: s.marginal_error,
            });
            beats.push(beat);
        }
        reports.push((task.target, report));
    }
    Ok((beats, provenance, reports))
}

/// Feature rows for `beats`. Beats whose features cannot be computed are
/// dropped with a warning.
pub fn featurize(beats: &[Beat], cfg: &FeatureConfig) -> Result<Dataset> {
    let width = beats.first().map_or(0, Beat::width);
    let n_cols = cfg.vector_len(width);
    let mut rows = Vec::with_capacity(beats.len() * n_cols);
    let mut labels = Vec::with_capacity(beats.len());
    for (beat, fv) in beats.iter().zip(assemble_all(beats, cfg)) {
        match fv {
            Ok(v) => {
                rows.extend_from_slice(&v.values);
                labels.push(v.label.index());
            }
            Err(e) => log::warn!("beat of {} dropped: {e}", beat.source_record),
        }
    }
    let x = Array2::from_shape_vec((labels.len(), n_cols), rows).map_err(|e| Error::invalid(e.to_string()))?;
    Dataset::new(x, labels)
}

/// Digests identifying a run's inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDigests {
    pub config: String,
    pub records: String,
    /// Raw test beats and labels, before any augmentation.
    pub test: String,
    pub train_before_augmentation: String,
}

pub fn digest_records(records: &[EcgRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update(r.record_id.as_bytes());
        h.update([0, r.label.index() as u8, r.split_fold.unwrap_or(0)]);
        h.update(r.sample_rate_hz.to_bits().to_le_bytes());
        for v in r.leads().iter() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    format!("{:x}", h.finalize())
}

pub fn digest_beats(beats: &[Beat]) -> String {
    let refs: Vec<&Beat> = beats.iter().collect();
    let labels: Vec<usize> = beats.iter().map(|b| b.label.index()).collect();
    digest_dataset(&beat_matrix(&refs), &labels)
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub digests: RunDigests,
    pub log: TrainingLog,
    pub params: ModelParams,
    pub standardizer: Standardizer,
    pub provenance: Vec<ProvenanceRow>,
    pub preprocess: PreprocessSummary,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Artifact file names inside a run directory.
pub mod artifacts {
    pub const DIGESTS: &str = "digests.json";
    pub const PREPROCESS: &str = "preprocess.json";
    pub const SYNTHETIC_BEATS: &str = "synthetic_beats.bin";
    pub const SYNTHETIC_INDEX: &str = "synthetic_beats.csv";
    pub const PROVENANCE: &str = "provenance.csv";
    pub const TRAINING_LOG: &str = "training_log.csv";
    pub const CHECKPOINT: &str = "model.ckpt";
    pub const METRICS: &str = "metrics.json";
    pub const CONFUSION: &str = "confusion.csv";
    pub const CONFUSION_PERCENT: &str = "confusion_percent.csv";
    pub const CONFUSION_SVG: &str = "confusion.svg";
}

/// Run every stage on already-loaded records. With `out_dir`, artifacts are
/// written as each stage completes.
pub fn run_pipeline(
    records: &[EcgRecord],
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
) -> std::result::Result<RunOutcome, StageFailure> {
    cfg.validate().at(Stage::Preprocess)?;
    let (beats, preprocess) = preprocess_records(records, &cfg.dsp);
    if let Some(dir) = out_dir {
        write_json(&dir.join(artifacts::PREPROCESS), &preprocess).at(Stage::Preprocess)?;
    }
    let split = split_beats(beats, &cfg.split, cfg.run.seed).at(Stage::Split)?;
    let digests = RunDigests {
        config: cfg.digest(),
        records: digest_records(records),
        test: digest_beats(&split.test),
        train_before_augmentation: digest_beats(&split.train),
    };
    if let Some(dir) = out_dir {
        write_json(&dir.join(artifacts::DIGESTS), &digests).at(Stage::Split)?;
    }
    let mut outcome = run_split(split, cfg, digests, out_dir)?;
    outcome.preprocess = preprocess;
    Ok(outcome)
}

/// Stages after splitting, for callers that share one preprocessing pass
/// across several strategies.
pub fn run_split(
    split: SplitBeats,
    cfg: &PipelineConfig,
    digests: RunDigests,
    out_dir: Option<&Path>,
) -> std::result::Result<RunOutcome, StageFailure> {
    let SplitBeats { train: mut train_beats, validation, test } = split;
    let mut provenance = Vec::new();
    if cfg.run.strategy == Strategy::Ot {
        let (synth, prov, reports) = augment_beats(&train_beats, &cfg.augment, cfg.run.seed).at(Stage::Augment)?;
        for (class, r) in &reports {
            log::info!(
                "{class}: {} batches, {} retried, {} skipped",
                r.batches_run,
                r.batches_retried,
                r.batches_skipped
            );
        }
        if let Some(dir) = out_dir {
            write_beats(&dir.join(artifacts::SYNTHETIC_BEATS), &dir.join(artifacts::SYNTHETIC_INDEX), &synth)
                .at(Stage::Augment)?;
            write_provenance(&dir.join(artifacts::PROVENANCE), &prov).at(Stage::Augment)?;
        }
        train_beats.extend(synth);
        provenance = prov;
    }

    let (train_set, val_set) =
        prepare_training(&train_beats, &validation, cfg.run.strategy, &cfg.features, cfg.run.seed).at(Stage::Features)?;
    let train_counts = train_set.class_counts(N_CLASSES);
    log::info!("training class counts: {train_counts:?}");

    let (params, log, standardizer) = match fit_model(&train_set, &val_set, &cfg.model, &cfg.train) {
        Ok(v) => v,
        Err(Error::DivergedTraining { epoch, loss, log }) => {
            if let Some(dir) = out_dir {
                log.save_csv(&dir.join(artifacts::TRAINING_LOG)).ok();
            }
            return Err(Error::DivergedTraining { epoch, loss, log }).at(Stage::Train);
        }
        Err(e) => return Err(e).at(Stage::Train),
    };
    if let Some(dir) = out_dir {
        log.save_csv(&dir.join(artifacts::TRAINING_LOG)).at(Stage::Train)?;
        save_checkpoint(&dir.join(artifacts::CHECKPOINT), &params, Some(&standardizer)).at(Stage::Train)?;
    }

    let mut run_metrics = evaluate(&params, &standardizer, &test, cfg, &digests).at(Stage::Eval)?;
    run_metrics.train_class_counts = train_counts;
    if let Some(dir) = out_dir {
        write_run_report(dir, &run_metrics, cfg.eval.heatmap).at(Stage::Report)?;
    }
    Ok(RunOutcome {
        metrics: run_metrics,
        digests,
        log,
        params,
        standardizer,
        provenance,
        preprocess: PreprocessSummary::default(),
    })
}

/// Feature the training and validation beats; with [`Strategy::Oversample`]
/// the training rows are then duplicated up to the majority count.
/// Transported beats, if any, are expected to be in `train_beats` already.
pub fn prepare_training(
    train_beats: &[Beat],
    validation: &[Beat],
    strategy: Strategy,
    features: &FeatureConfig,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let mut train_set = featurize(train_beats, features)?;
    let val_set = featurize(validation, features)?;
    if strategy == Strategy::Oversample {
        let (x, y) = oversample(&train_set.x, &train_set.y, N_CLASSES, seed)?;
        train_set = Dataset::new(x, y)?;
    }
    Ok((train_set, val_set))
}

/// Standardize with statistics of `train_set`, then train.
pub fn fit_model(
    train_set: &Dataset,
    val_set: &Dataset,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(ModelParams, TrainingLog, Standardizer)> {
    let standardizer = Standardizer::fit(&train_set.x)?;
    let train_std = Dataset::new(standardizer.transform(&train_set.x)?, train_set.y.clone())?;
    let val_std = Dataset::new(standardizer.transform(&val_set.x)?, val_set.y.clone())?;
    let (params, log) = train(&train_std, &val_std, model, train_cfg)?;
    Ok((params, log, standardizer))
}

/// Score a trained model on the test beats. `train_class_counts` is left
/// empty for the caller to fill.
pub fn evaluate(
    params: &ModelParams,
    standardizer: &Standardizer,
    test: &[Beat],
    cfg: &PipelineConfig,
    digests: &RunDigests,
) -> Result<RunMetrics> {
    let test_set = featurize(test, &cfg.features)?;
    let predicted = predict(&standardizer.transform(&test_set.x)?, params)?;
    let cm = confusion(&test_set.y, &predicted)?;
    let m = metrics(&cm)?;
    Ok(RunMetrics {
        run_id: cfg.run_id(),
        strategy: cfg.run.strategy.to_string(),
        seed: cfg.run.seed,
        config_digest: digests.config.clone(),
        test_digest: digests.test.clone(),
        train_class_counts: Vec::new(),
        accuracy: m.accuracy,
        macro_f1: m.macro_f1,
        per_class: m.per_class,
        confusion: cm,
    })
}

/// Metrics JSON, confusion CSVs and the heatmap.
pub fn write_run_report(dir: &Path, m: &RunMetrics, heatmap: bool) -> Result<()> {
    write_json(&dir.join(artifacts::METRICS), m)?;
    std::fs::write(dir.join(artifacts::CONFUSION), m.confusion.to_csv())?;
    let mut pct = String::from("true\\predicted");
    for c in DiagnosticClass::ALL {
        pct.push_str(&format!(",{}", c.name()));
    }
    pct.push('\n');
    for (c, row) in DiagnosticClass::ALL.iter().zip(m.confusion.percentages()) {
        pct.push_str(c.name());
        for v in row {
            pct.push_str(&format!(",{v:.4}"));
        }
        pct.push('\n');
    }
    std::fs::write(dir.join(artifacts::CONFUSION_PERCENT), pct)?;
    if heatmap {
        std::fs::write(
            dir.join(artifacts::CONFUSION_SVG),
            confusion_heatmap_svg(&format!("{} confusion (% of true class)", m.run_id), &m.confusion),
        )?;
    }
    Ok(())
}

pub fn read_run_metrics(path: &Path) -> Result<RunMetrics> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}
