use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ecgot_core::dsp::archive::read_beats;
use ecgot_core::pipeline::{read_provenance, read_run_metrics};
use ecgot_core::DiagnosticClass;

const TINY: &str = r#"
[synthetic]
n_records = 120

[split]
train_beat_limits = [100, 20, 20, 20, 20]
test_beat_limits = [20, 20, 20, 20, 20]

[model]
d_model = 8
n_layers = 1
n_heads = 2
d_k = 4
d_v = 4
d_ff = 16
conv_channels = 8

[train]
epochs = 2
batch_size = 32
"#;

fn ecgot(args: &[&str], paths: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ecgot"));
    cmd.args(args).env_remove("ECGOT_DATA_ROOT");
    for p in paths {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY).unwrap();
    path
}

fn run(dir: &Path, strategy: &str, seed: &str) -> PathBuf {
    let cfg = tiny_config(dir);
    let out = dir.join("runs");
    let o = Command::new(env!("CARGO_BIN_EXE_ecgot"))
        .args(["run", "--strategy", strategy, "--seed", seed, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join(format!("{strategy}-seed{seed}"))
}

#[test]
fn ot_run_writes_artifacts_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = run(dir.path(), "ot", "3");
    for name in ["config.toml", "digests.json", "metrics.json", "model.ckpt", "training_log.csv", "confusion.csv"] {
        assert!(run_dir.join(name).exists(), "{name} missing");
    }
    let prov = read_provenance(&run_dir.join("provenance.csv")).unwrap();
    let synth = read_beats(&run_dir.join("synthetic_beats.bin"), &run_dir.join("synthetic_beats.csv"), 60).unwrap();
    assert!(!prov.is_empty());
    assert_eq!(prov.len(), synth.len());
    assert!(prov.iter().all(|r| r.source_class == DiagnosticClass::Norm && r.target_class != DiagnosticClass::Norm));
    assert!(prov.iter().all(|r| r.gamma > 0.0 && r.marginal_error < 1e-6));

    let m = read_run_metrics(&run_dir.join("metrics.json")).unwrap();
    let counts = &m.train_class_counts;
    let top = counts[0];
    assert!(counts.iter().all(|&c| c == top), "{counts:?}");
}

#[test]
fn oversample_balances_training_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = run(dir.path(), "oversample", "4");
    let m = read_run_metrics(&run_dir.join("metrics.json")).unwrap();
    let max = *m.train_class_counts.iter().max().unwrap();
    assert!(m.train_class_counts.iter().all(|&c| c == max), "{:?}", m.train_class_counts);
    assert!(!run_dir.join("provenance.csv").exists());
}

#[test]
fn compare_runs_and_reject_mismatched_test_sets() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), "none", "6");
    let b = run(dir.path(), "oversample", "6");
    let out = dir.path().join("cmp");
    let o = ecgot(&["compare"], &[&a, &b, Path::new("--out"), &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["comparison.md", "comparison.csv", "metrics_bar.svg", "confusion_none-seed6.svg"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let md = fs::read_to_string(out.join("comparison.md")).unwrap();
    assert!(md.contains("none-seed6") && md.contains("oversample-seed6"));

    // A different seed changes the test-side caps, so the test set differs.
    let c = run(dir.path(), "none", "7");
    let o = ecgot(&["compare"], &[&a, &c, Path::new("--out"), &dir.path().join("cmp2")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("different test sets"));

    let o = ecgot(&["compare"], &[&a]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_metadata_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecgot(&["ingest", "--data-root"], &[dir.path(), Path::new("--out"), &dir.path().join("o")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ptbxl_database.csv"));
}

#[test]
fn data_root_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ecgot"))
        .args(["ingest", "--out"])
        .arg(dir.path().join("o"))
        .env("ECGOT_DATA_ROOT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&*dir.path().to_string_lossy()));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[train]\nlearning_rat = 0.1\n").unwrap();
    let o = ecgot(&["run", "--synthetic", "10", "--config"], &[&cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("learning_rat"));
}

#[test]
fn failed_run_names_stage_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let o = ecgot(
        &["run", "--run-id", "broken", "--manifest"],
        &[&dir.path().join("absent.csv"), Path::new("--out"), &out],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage ingest failed"));
    assert!(out.join("failed/broken/config.toml").exists());
    assert!(out.join("failed/broken/failure.txt").exists());
    assert!(!out.join("broken").exists());
}

#[test]
fn existing_run_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = run(dir.path(), "none", "8");
    let cfg = run_dir.join("config.toml");
    let o = ecgot(&["run", "--config"], &[&cfg]);
    assert_eq!(o.status.code(), Some(2));
    let o = ecgot(&["run", "--force", "--config"], &[&cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn staged_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = tiny_config(d);
    let ok = |o: Output| assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    ok(ecgot(&["ingest", "--synthetic", "40", "--out"], &[&d.join("data")]));
    let manifest = fs::read_to_string(d.join("data/manifest.csv")).unwrap();
    assert!(manifest.lines().nth(1).unwrap().ends_with(",records/synth1_00000"));
    assert!(d.join("data/stats.json").exists());

    ok(ecgot(&["preprocess", "--manifest"], &[&d.join("data/manifest.csv"), Path::new("--out"), &d.join("pp")]));
    let beats = d.join("pp/beats.bin");
    ok(ecgot(&["features", "--csv", "--beats"], &[&beats, Path::new("--out"), &d.join("ft")]));
    let header = fs::read_to_string(d.join("ft/features.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 673);

    ok(ecgot(&["augment", "--config"], &[&cfg, Path::new("--beats"), &beats, Path::new("--out"), &d.join("aug")]));
    ok(ecgot(
        &["train", "--config"],
        &[
            &cfg,
            Path::new("--beats"),
            &beats,
            Path::new("--synthetic"),
            &d.join("aug/synthetic_beats.bin"),
            Path::new("--out"),
            &d.join("tr"),
        ],
    ));
    ok(ecgot(
        &["eval", "--config"],
        &[&cfg, Path::new("--checkpoint"), &d.join("tr/model.ckpt"), Path::new("--beats"), &beats, Path::new("--out"), &d.join("ev")],
    ));
    let m = read_run_metrics(&d.join("ev/metrics.json")).unwrap();
    assert!((0.0..=1.0).contains(&m.accuracy));
}

#[test]
fn ingest_reads_a_ptbxl_tree_from_a_relative_root() {
    use ecgot_core::ingest::{generate_synthetic_ecg, EcgRecord, SyntheticConfig};

    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ptb");
    let rec_dir = root.join("records100/00000");
    fs::create_dir_all(&rec_dir).unwrap();
    let synth = generate_synthetic_ecg(4, &[0.25, 0.25, 0.25, 0.25, 0.0], 2, &SyntheticConfig::default()).unwrap();
    let codes = ["NORM", "IMI", "NDT", "CLBBB"];
    let mut db = String::from("ecg_id,patient_id,scp_codes,strat_fold,filename_lr\n");
    for (i, s) in synth.iter().enumerate() {
        let name = format!("{:05}_lr", i + 1);
        let rec = EcgRecord::new(name.clone(), "p", s.leads().clone(), 100.0, s.label, None).unwrap();
        rec.save(&rec_dir).unwrap();
        let code = codes[s.label.index()];
        db.push_str(&format!("{},{}.0,\"{{'{code}': 100.0, 'SR': 0.0}}\",{},records100/00000/{name}\n", i + 1, 100 + i, i + 1));
    }
    db.push_str("9,200.0,\"{'SR': 0.0}\",1,records100/00000/00009_lr\n");
    fs::write(root.join("ptbxl_database.csv"), db).unwrap();
    fs::write(
        root.join("scp_statements.csv"),
        ",description,diagnostic_class\nNORM,normal,NORM\nIMI,infarct,MI\nNDT,st change,STTC\nCLBBB,block,CD\nSR,rhythm,\n",
    )
    .unwrap();

    let o = Command::new(env!("CARGO_BIN_EXE_ecgot"))
        .current_dir(dir.path())
        .args(["ingest", "--data-root", "ptb", "--out", "work"])
        .env_remove("ECGOT_DATA_ROOT")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("4 records"), "{table}");

    let o = ecgot(&["preprocess", "--manifest"], &[&dir.path().join("work/manifest.csv"), Path::new("--out"), &dir.path().join("pp")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("pp/preprocess.json")).unwrap();
    assert!(summary.contains("\"failed_records\": 0"), "{summary}");
}
