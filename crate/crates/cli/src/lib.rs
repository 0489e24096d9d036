//! `ecgot` command-line driver.
//!
//! Every subcommand reads one TOML config (unknown keys rejected); flags
//! override it, and `ECGOT_DATA_ROOT` overrides the configured data root.
//! Exit codes: 0 success, 1 stage failure, 2 usage or missing metadata,
//! 3 runs evaluated on different test sets.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ecgot_core::dsp::archive::{read_beats, write_beats};
use ecgot_core::dsp::{preprocess_record, Beat};
use ecgot_core::eval::{compare_runs, confusion_heatmap_svg, metrics_bar_chart_svg, RunMetrics};
use ecgot_core::features::{assemble_all, feature_names, matrix};
use ecgot_core::ingest::{
    dataset_stats, generate_synthetic_ecg, ptbxl_manifest, read_manifest, write_manifest, EcgRecord, ManifestRow,
};
use ecgot_core::model::{load_checkpoint, save_checkpoint};
use ecgot_core::par;
use ecgot_core::pipeline::{
    artifacts, augment_beats, digest_beats, digest_records, evaluate, fit_model, prepare_training, preprocess_records,
    read_run_metrics, run_pipeline, split_beats, write_provenance, write_run_report, PipelineConfig, RunDigests,
    Stage, StageFailure, Strategy,
};

pub const DATA_ROOT_ENV: &str = "ECGOT_DATA_ROOT";
pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const MANIFEST: &str = "manifest.csv";
pub const BEATS_BIN: &str = "beats.bin";
pub const FAILED_DIR: &str = "failed";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Stage(#[from] StageFailure),
    #[error(transparent)]
    Core(#[from] ecgot_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingMetadata(_) | CliError::Config(_) => 2,
            CliError::Core(ecgot_core::Error::IncomparableRuns(..)) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ecgot", version, about = "ECG beat rebalancing with optimal transport")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a manifest from a PTB-XL tree or generate synthetic records.
    Ingest(IngestArgs),
    /// Filter, detect R-peaks and cut beats into a beat archive.
    Preprocess(PreprocessArgs),
    /// Compute feature vectors for a beat archive.
    Features(BeatsArgs),
    /// Transport majority beats onto minority classes of the training folds.
    Augment(BeatsArgs),
    /// Train the classifier on the training folds of a beat archive.
    Train(TrainArgs),
    /// Score a checkpoint on the test fold of a beat archive.
    Eval(EvalArgs),
    /// Run the whole pipeline into `<output_dir>/<run_id>`.
    Run(RunArgs),
    /// Compare finished runs scored on the same test set.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data_root: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Seed for data sampling, augmentation and training.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Generate this many synthetic records instead of reading PTB-XL.
    #[arg(long)]
    pub synthetic: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BeatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Beat archive (`.bin`, with its `.csv` index alongside).
    #[arg(long)]
    pub beats: PathBuf,
    /// Also write a CSV copy of the feature matrix.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub beats: PathBuf,
    /// Synthetic beat archive to add to the training folds.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub beats: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, conflicts_with = "synthetic")]
    pub manifest: Option<PathBuf>,
    /// Generate this many synthetic records in memory.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Replace an existing run directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run directories containing metrics.json.
    #[arg(required = true, num_args = 2..)]
    pub runs: Vec<PathBuf>,
    #[arg(short, long, default_value = "comparison")]
    pub out: PathBuf,
}

pub fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

/// Config file (or defaults), then the data-root environment variable, then flags.
pub fn load_config(args: &CommonArgs) -> CliResult<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str::<PipelineConfig>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(root) = std::env::var_os(DATA_ROOT_ENV).filter(|v| !v.is_empty()) {
        cfg.paths.data_root = Some(PathBuf::from(root));
    }
    if let Some(root) = &args.data_root {
        cfg.paths.data_root = Some(root.clone());
    }
    if let Some(out) = &args.out {
        cfg.paths.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
        cfg.train.seed = seed;
        cfg.synthetic.seed = seed;
    }
    if let Some(s) = &args.strategy {
        cfg.run.strategy = s.parse::<Strategy>().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    if let Some(id) = &args.run_id {
        cfg.run.run_id = Some(id.clone());
    }
    Ok(cfg)
}

pub fn config_to_toml(cfg: &PipelineConfig) -> CliResult<String> {
    toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))
}

pub fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Preprocess(a) => cmd_preprocess(&a),
        Command::Features(a) => cmd_features(&a),
        Command::Augment(a) => cmd_augment(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Run(a) => cmd_run(&a).map(|_| ()),
        Command::Compare(a) => cmd_compare(&a).map(|_| ()),
    }
}

fn index_path(bin: &Path) -> PathBuf {
    bin.with_extension("csv")
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(v).map_err(ecgot_core::Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Load every record listed in a manifest; relative paths resolve against
/// the manifest's directory.
pub fn load_records(manifest: &Path) -> CliResult<Vec<EcgRecord>> {
    let rows = read_manifest(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    par::map(&rows, |r| EcgRecord::load(r, base)).into_iter().map(|r| r.map_err(CliError::from)).collect()
}

fn synthetic_records(cfg: &PipelineConfig) -> CliResult<Vec<EcgRecord>> {
    let s = &cfg.synthetic;
    Ok(generate_synthetic_ecg(s.n_records, &s.class_mix, s.seed, &s.generator)?)
}

pub fn cmd_ingest(args: &IngestArgs) -> CliResult {
    let mut cfg = load_config(&args.common)?;
    let out = cfg.paths.output_dir.clone();
    fs::create_dir_all(&out)?;
    let (records, rows) = if let Some(n) = args.synthetic {
        cfg.synthetic.n_records = n;
        let records = synthetic_records(&cfg)?;
        let rec_dir = out.join("records");
        fs::create_dir_all(&rec_dir)?;
        let mut rows = Vec::with_capacity(records.len());
        for r in &records {
            let mut row = r.save(&rec_dir)?;
            row.path = PathBuf::from("records").join(&r.record_id);
            rows.push(row);
        }
        (records, rows)
    } else {
        let root = cfg
            .paths
            .data_root
            .clone()
            .ok_or_else(|| CliError::Usage(format!("no data root: pass --data-root, set {DATA_ROOT_ENV}, or use --synthetic")))?;
        // Absolute record paths keep the manifest valid wherever it is written.
        let root = fs::canonicalize(&root)
            .map_err(|e| CliError::MissingMetadata(format!("data root {}: {e}", root.display())))?;
        let rows: Vec<ManifestRow> = match ptbxl_manifest(&root) {
            Ok(r) => r,
            Err(ecgot_core::Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::MissingMetadata(e.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let records = par::map(&rows, |r| EcgRecord::load(r, &root))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        (records, rows)
    };
    write_manifest(&out.join(MANIFEST), &rows)?;
    let beats: Vec<usize> = par::map(&records, |r| preprocess_record(r, &cfg.dsp).map_or(0, |p| p.beats.len()));
    let stats = dataset_stats(&records, &beats)?;
    write_json(&out.join("stats.json"), &stats)?;
    println!("{} records -> {}", rows.len(), out.join(MANIFEST).display());
    print!("{stats}");
    Ok(())
}

pub fn cmd_preprocess(args: &PreprocessArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let manifest = args
        .manifest
        .clone()
        .or_else(|| cfg.paths.manifest.clone())
        .ok_or_else(|| CliError::Usage("no manifest: pass --manifest or set paths.manifest".into()))?;
    let records = load_records(&manifest)?;
    let (beats, summary) = preprocess_records(&records, &cfg.dsp);
    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out)?;
    let bin = out.join(BEATS_BIN);
    write_beats(&bin, &index_path(&bin), &beats)?;
    write_json(&out.join(artifacts::PREPROCESS), &summary)?;
    println!(
        "{} beats from {} records ({} failed) -> {}",
        summary.beats,
        summary.records,
        summary.failed_records,
        bin.display()
    );
    Ok(())
}

fn load_beats(path: &Path, cfg: &PipelineConfig) -> CliResult<Vec<Beat>> {
    Ok(read_beats(path, &index_path(path), cfg.dsp.window_samples)?)
}

pub fn cmd_features(args: &BeatsArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let beats = load_beats(&args.beats, &cfg)?;
    let mut rows = Vec::with_capacity(beats.len());
    let mut dropped = 0usize;
    for r in assemble_all(&beats, &cfg.features) {
        match r {
            Ok(v) => rows.push(v),
            Err(e) => {
                dropped += 1;
                log::warn!("beat dropped: {e}");
            }
        }
    }
    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out)?;
    matrix::write_binary(&out.join("features.bin"), &rows)?;
    if args.csv {
        let names = feature_names(cfg.dsp.window_samples, &cfg.features);
        matrix::write_csv(&out.join("features.csv"), &names, &rows)?;
    }
    println!("{} feature vectors ({dropped} dropped) -> {}", rows.len(), out.join("features.bin").display());
    Ok(())
}

pub fn cmd_augment(args: &BeatsArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    let beats = load_beats(&args.beats, &cfg)?;
    let split = split_beats(beats, &cfg.split, cfg.run.seed)?;
    let (synth, prov, reports) = augment_beats(&split.train, &cfg.augment, cfg.run.seed)?;
    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out)?;
    let bin = out.join(artifacts::SYNTHETIC_BEATS);
    write_beats(&bin, &index_path(&bin), &synth)?;
    write_provenance(&out.join(artifacts::PROVENANCE), &prov)?;
    for (class, r) in &reports {
        println!(
            "{class}: {} batches ({} retried, {} skipped)",
            r.batches_run, r.batches_retried, r.batches_skipped
        );
    }
    println!("{} synthetic beats -> {}", synth.len(), bin.display());
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> CliResult {
    let cfg = load_config(&args.common)?;
    cfg.validate()?;
    let beats = load_beats(&args.beats, &cfg)?;
    let split = split_beats(beats, &cfg.split, cfg.run.seed)?;
    let mut train_beats = split.train;
    if let Some(path) = &args.synthetic {
        train_beats.extend(load_beats(path, &cfg)?);
    }
    let (train_set, val_set) =
        prepare_training(&train_beats, &split.validation, cfg.run.strategy, &cfg.features, cfg.run.seed)?;
    let (params, log, standardizer) = fit_model(&train_set, &val_set, &cfg.model, &cfg.train)?;
    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out)?;
    save_checkpoint(&out.join(artifacts::CHECKPOINT), &params, Some(&standardizer))?;
    log.save_csv(&out.join(artifacts::TRAINING_LOG))?;
    println!(
        "trained {} parameters on {} rows; best epoch {} -> {}",
        params.num_params(),
        train_set.len(),
        log.best_epoch,
        out.join(artifacts::CHECKPOINT).display()
    );
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult {
    let mut cfg = load_config(&args.common)?;
    let (params, standardizer) = load_checkpoint(&args.checkpoint)?;
    let standardizer =
        standardizer.ok_or_else(|| CliError::Usage("checkpoint carries no input standardizer".into()))?;
    cfg.model = params.config.clone();
    let beats = load_beats(&args.beats, &cfg)?;
    let split = split_beats(beats, &cfg.split, cfg.run.seed)?;
    let digests = RunDigests {
        config: cfg.digest(),
        records: String::new(),
        test: digest_beats(&split.test),
        train_before_augmentation: digest_beats(&split.train),
    };
    let m = evaluate(&params, &standardizer, &split.test, &cfg, &digests)?;
    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out)?;
    write_run_report(out, &m, cfg.eval.heatmap)?;
    println!("accuracy {:.4}  macro F1 {:.4}", m.accuracy, m.macro_f1);
    Ok(())
}

fn move_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    if to.exists() {
        fs::remove_dir_all(to)?;
    }
    if let Some(parent) = to.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::rename(from, to)
}

/// Full pipeline. Writes into a staging directory first; on success it
/// becomes `<output_dir>/<run_id>`, on failure `<output_dir>/failed/<run_id>`.
pub fn cmd_run(args: &RunArgs) -> CliResult<PathBuf> {
    let mut cfg = load_config(&args.common)?;
    if let Some(m) = &args.manifest {
        cfg.paths.manifest = Some(m.clone());
    }
    if let Some(n) = args.synthetic {
        cfg.paths.manifest = None;
        cfg.synthetic.n_records = n;
    }
    cfg.validate()?;
    let run_id = cfg.run_id();
    if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id == FAILED_DIR || run_id.starts_with('.') {
        return Err(CliError::Usage(format!("unusable run id {run_id:?}")));
    }
    let out = cfg.paths.output_dir.clone();
    let run_dir = out.join(&run_id);
    if run_dir.exists() && !args.force {
        return Err(CliError::Usage(format!("{} exists; pass --force to replace it", run_dir.display())));
    }
    let staging = out.join(format!(".staging-{run_id}"));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    fs::write(staging.join(CONFIG_SNAPSHOT), config_to_toml(&cfg)?)?;

    let records = match &cfg.paths.manifest {
        Some(m) => load_records(m),
        None => synthetic_records(&cfg),
    }
    .map_err(|e| match e {
        CliError::Core(source) => CliError::Stage(StageFailure { stage: Stage::Ingest, source }),
        other => other,
    });
    let result = records.and_then(|r| run_pipeline(&r, &cfg, Some(&staging)).map_err(CliError::from));
    match result {
        Ok(outcome) => {
            move_dir(&staging, &run_dir)?;
            println!(
                "{run_id}: accuracy {:.4}  macro F1 {:.4} -> {}",
                outcome.metrics.accuracy,
                outcome.metrics.macro_f1,
                run_dir.display()
            );
            Ok(run_dir)
        }
        Err(e) => {
            let failed = out.join(FAILED_DIR).join(&run_id);
            fs::write(staging.join("failure.txt"), format!("{e}\n")).ok();
            move_dir(&staging, &failed)?;
            eprintln!("partial artifacts kept in {}", failed.display());
            Err(e)
        }
    }
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<Vec<RunMetrics>> {
    if args.runs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two runs".into()));
    }
    let runs = args
        .runs
        .iter()
        .map(|d| read_run_metrics(&d.join(artifacts::METRICS)))
        .collect::<Result<Vec<_>, _>>()?;
    let comparison = compare_runs(&runs)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("comparison.md"), comparison.to_markdown())?;
    fs::write(args.out.join("comparison.csv"), comparison.to_csv())?;
    write_json(&args.out.join("comparison.json"), &comparison)?;
    fs::write(args.out.join("metrics_bar.svg"), metrics_bar_chart_svg(&comparison))?;
    for r in &runs {
        let name: String = r.run_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        fs::write(
            args.out.join(format!("confusion_{name}.svg")),
            confusion_heatmap_svg(&format!("{} confusion (% of true class)", r.run_id), &r.confusion),
        )?;
    }
    print!("{}", comparison.to_markdown());
    Ok(runs)
}

/// Records digest for a manifest, as stored in a run's `digests.json`.
pub fn manifest_digest(manifest: &Path) -> CliResult<String> {
    Ok(digest_records(&load_records(manifest)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "[run]\nseed = 4\nstrategy = \"oversample\"\n[train]\nepochs = 7\n").unwrap();
        let args = CommonArgs { config: Some(path.clone()), ..Default::default() };
        let cfg = load_config(&args).unwrap();
        assert_eq!((cfg.run.seed, cfg.run.strategy, cfg.train.epochs), (4, Strategy::Oversample, 7));
        let args = CommonArgs { config: Some(path), seed: Some(9), strategy: Some("ot".into()), ..Default::default() };
        let cfg = load_config(&args).unwrap();
        assert_eq!((cfg.run.seed, cfg.train.seed, cfg.run.strategy), (9, 9, Strategy::Ot));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "[train]\nepoch = 7\n").unwrap();
        let err = load_config(&CommonArgs { config: Some(path), ..Default::default() }).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("epoch"));
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.split.train_beat_limits = Some([10, 2, 2, 2, 2]);
        cfg.augment.gamma_scale = 0.1 + 0.2;
        let text = config_to_toml(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::MissingMetadata("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(ecgot_core::Error::IncomparableRuns("a".into(), "b".into())).exit_code(), 3);
        assert_eq!(CliError::Core(ecgot_core::Error::EmptyDataset).exit_code(), 1);
    }
}
