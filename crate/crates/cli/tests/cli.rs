use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use assist_cli::table::read_csv;
use assist_cli::{ExperimentConfig, Runner};

fn smoke_text() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")).unwrap()
}

/// Smoke config writing into `dir`, with `edit` applied to the TOML text.
fn config(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let text = edit(smoke_text().replace("output_dir = \"runs/smoke\"", &format!("output_dir = {:?}", dir.join("run"))));
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn assist(cfg: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assist"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .env("ASSIST_WORKERS", "1")
        .env("RUST_LOG", "info")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn stages_require_their_upstream() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), |s| s);
    let o = assist(&cfg, &["gen-pseudo"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("gen-corpus"), "{}", stderr(&o));
    assert_eq!(assist(&cfg, &["gen-corpus"]).status.code(), Some(0));
    let o = assist(&cfg, &["gen-pseudo"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("train-aux/full"), "{}", stderr(&o));
    let o = assist(&cfg, &["sweep-composition"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep-alpha"), "{}", stderr(&o));
    let o = assist(&cfg, &["eval"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn completed_stages_are_cache_hits_and_report_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), |s| s);
    let first = assist(&cfg, &["all"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let again = assist(&cfg, &["all"]);
    assert_eq!(again.status.code(), Some(0));
    assert!(!stderr(&again).contains(": running"), "{}", stderr(&again));
    assert!(stderr(&again).contains("gen-corpus: cached"));

    let csv = dir.path().join("run/sweep-composition/composition.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    std::fs::write(&csv, text.replacen("T,,", "T,,1", 1)).unwrap();
    let o = assist(&cfg, &["report"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MISMATCH sweep-composition/composition.csv"));

    // Rerunning the stage restores the file from the stored metrics.
    assert_eq!(assist(&cfg, &["sweep-composition"]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);
    assert_eq!(assist(&cfg, &["report"]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let typo = config(dir.path(), |s| s.replace("clean_fractions", "clean_fraction"));
    let o = assist(&typo, &["gen-corpus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("clean_fraction"), "{}", stderr(&o));
    let bad_domain = config(dir.path(), |s| s.replace("[\"taxi\"]", "[\"spaceport\"]"));
    assert_eq!(assist(&bad_domain, &["gen-corpus"]).status.code(), Some(1));
    let no_seed = config(dir.path(), |s| s.replace("split_seed = 2\n", ""));
    assert_eq!(assist(&no_seed, &["gen-corpus"]).status.code(), Some(1));
    let missing = dir.path().join("nope.toml");
    assert_eq!(assist(&missing, &["gen-corpus"]).status.code(), Some(1));
    let ok = config(dir.path(), |s| s);
    assert_eq!(assist(&ok, &["no-such-stage"]).status.code(), Some(1));
}

#[test]
fn diverging_training_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), |s| s.replacen("peak_lr = 3e-3", "peak_lr = 1e300", 1));
    for stage in ["gen-corpus", "inject-noise"] {
        assert_eq!(assist(&cfg, &[stage]).status.code(), Some(0));
    }
    let o = assist(&cfg, &["train-aux"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn output_root_override_and_alpha_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_toml(&smoke_text()).unwrap();
    cfg.sweeps.alpha_grid = (0..=10).map(|i| i as f64 / 10.0).collect();
    cfg.noise.contrast = None;
    cfg.aux.epochs = 1;
    cfg.primary.epochs = 1;
    std::env::set_var("ASSIST_OUTPUT_ROOT", dir.path());
    let mut r = Runner::open(cfg).unwrap();
    std::env::remove_var("ASSIST_OUTPUT_ROOT");
    assert_eq!(r.root, dir.path().join("runs/smoke"));
    r.gen_corpus().unwrap();
    r.inject_noise().unwrap();
    r.train_aux(&[assist_cli::runner::CleanSubset::Fraction(1.0)]).unwrap();
    r.gen_pseudo(&["full".into()], &[r.cfg.noise.preset]).unwrap();
    r.sweep_alpha().unwrap();
    let rows = read_csv(&std::fs::read(r.root.join("sweep-alpha/alpha_high-noise.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[3]["alpha"], "0.3");
    assert!(rows.iter().all(|row| ["jga", "jta", "slot_acc"].iter().all(|c| row[*c].parse::<f64>().is_ok())));
    let plot: serde_json::Value = serde_json::from_slice(&std::fs::read(r.root.join("sweep-alpha/alpha_high-noise.plot.json")).unwrap()).unwrap();
    assert_eq!(plot["data"], "alpha_high-noise.csv");
}
