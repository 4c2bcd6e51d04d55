//! Stage commands on the bundled fixture, through the library and the binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use perceptrace::cli::{
    self, cmd_eval, cmd_generate, cmd_pipeline, cmd_reduce, cmd_trace, cmd_train,
};
use perceptrace::config::{PipelineConfig, RESOLVED_CONFIG};
use perceptrace::Error;

fn fixture_config(out: &Path) -> PipelineConfig {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.toml");
    let mut c = PipelineConfig::load(Path::new(path)).unwrap();
    c.paths.out = out.to_path_buf();
    c
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perceptrace"))
}

const OUTPUTS: [&str; 9] = [
    cli::DOCUMENTS,
    cli::TRACES,
    cli::REDUCED,
    cli::TAGGED,
    cli::JOINT,
    cli::FINAL,
    cli::TRAIN_METADATA,
    cli::REPORT_JSON,
    cli::REPORT_CSV,
];

#[test]
fn pipeline_equals_stages_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_pipeline(&fixture_config(&a)).unwrap();

    let staged = fixture_config(&b);
    cmd_generate(&staged).unwrap();
    cmd_trace(&staged).unwrap();
    cmd_reduce(&staged).unwrap();
    cmd_train(&staged).unwrap();
    cmd_eval(&staged).unwrap();

    for f in OUTPUTS {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(a.join("pca_affinity_propagation.svg").exists());
    assert!(a.join("pca_hdbscan.svg").exists());
}

#[test]
fn rerun_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let c = fixture_config(dir.path());
    cmd_pipeline(&c).unwrap();
    let first: Vec<Vec<u8>> = OUTPUTS
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
    cmd_pipeline(&c).unwrap();
    for (f, before) in OUTPUTS.iter().zip(first) {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), before, "{f}");
    }
    let leftovers: Vec<PathBuf> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "tmp"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    cmd_pipeline(&fixture_config(&a)).unwrap();
    let resolved = PipelineConfig::load(&a.join(RESOLVED_CONFIG)).unwrap();
    assert_eq!(resolved, fixture_config(&a));
    let mut again = resolved;
    again.paths.out = dir.path().join("b");
    cmd_pipeline(&again).unwrap();
    assert_eq!(
        std::fs::read(a.join(cli::FINAL)).unwrap(),
        std::fs::read(dir.path().join("b").join(cli::FINAL)).unwrap()
    );
}

#[test]
fn training_metadata_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = fixture_config(dir.path());
    c.set_seed(9);
    cmd_pipeline(&c).unwrap();
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join(cli::TRAIN_METADATA)).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["skipped_tokens"], 0);
    assert_eq!(meta["bit_reproducible"], true);
    assert_eq!(meta["epoch_losses"].as_array().unwrap().len(), 10);
    let losses: Vec<f64> = meta["epoch_losses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(losses.last() < losses.first());
}

#[test]
fn threads_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .arg("--config")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.toml"))
        .arg("--out")
        .arg(dir.path())
        .args(["--threads", "2", "pipeline"])
        .status()
        .unwrap();
    assert!(status.success());
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join(cli::TRAIN_METADATA)).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["threads"], 2);
    assert_eq!(meta["bit_reproducible"], false);
    let resolved = std::fs::read_to_string(dir.path().join(RESOLVED_CONFIG)).unwrap();
    assert!(resolved.contains("threads = 2"), "{resolved}");
}

#[test]
fn eval_without_vectors_names_the_missing_table() {
    let dir = tempfile::tempdir().unwrap();
    match cmd_eval(&fixture_config(dir.path())) {
        Err(Error::Io { path, .. }) => assert_eq!(path, dir.path().join(cli::FINAL)),
        other => panic!("{other:?}"),
    }
    let out = bin()
        .arg("--out")
        .arg(dir.path())
        .arg("eval")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("final.vec"), "{stderr}");
}

#[test]
fn missing_scene_graph_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = fixture_config(dir.path());
    c.paths.scene_graphs = Some(dir.path().join("nope.jsonl"));
    let e = cmd_generate(&c).unwrap_err();
    assert!(e.to_string().contains("nope.jsonl"), "{e}");
}

#[test]
fn window_zero_fails_validation_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[skipgram]\nwindow = 0\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("train")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("window"), "{stderr}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[eval]\npca = 3\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("eval")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eval"));
}
