//! Pipeline-level behaviour: full runs, partial failure inventories,
//! config validation and the output-directory fallback.

use exposome::ingest::SynthConfig;
use exposome::pipeline::{run_pipeline, PipelineConfig, PipelineError, StageStatus, OUT_DIR_ENV};

fn quick_config(dir: &std::path::Path) -> PipelineConfig {
    PipelineConfig {
        seed: Some(3),
        out_dir: Some(dir.to_path_buf()),
        synth: SynthConfig { duration_s: 400, ..SynthConfig::default() },
        eval: exposome::pipeline::EvalSettings {
            classifiers: vec!["gaussian_nb".into()],
            ..Default::default()
        },
        ..PipelineConfig::default()
    }
}

#[test]
fn full_run_completes_all_stages() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&quick_config(dir.path())).unwrap();
    assert!(report.success);
    let names: Vec<&str> = report.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(
        names,
        vec!["ingest", "validate", "fuse", "stats", "spatial", "train", "evaluate", "report"]
    );
    assert!(report
        .stages
        .iter()
        .all(|s| matches!(s.status, StageStatus::Completed)));
    for artifact in [
        "validation.json",
        "fused.csv",
        "fused.meta.json",
        "correlation.csv",
        "pca.json",
        "regression_eda.csv",
        "qq_eda.csv",
        "tessellation.geojson",
        "tessellation.svg",
        "heatgrid.csv",
        "dbn_model.json",
        "eval_summary.csv",
        "summary.txt",
        "planted_truth.json",
    ] {
        assert!(report.artifacts.contains_key(artifact), "missing {artifact}");
        assert!(dir.path().join(artifact).exists(), "{artifact} not on disk");
    }
    assert!(dir.path().join("run_report.json").exists());
    assert!(
        !report.artifacts.contains_key("run_report.json"),
        "timing report must stay out of the deterministic inventory"
    );

    // The regression table carries the familiar four-column layout with
    // one row per predictor.
    let regression = std::fs::read_to_string(dir.path().join("regression_eda.csv")).unwrap();
    let mut lines = regression.lines();
    assert_eq!(
        lines.next().unwrap(),
        "term,Coefficients,Standard Error,t Stat,P-value"
    );
    assert!(regression.lines().any(|l| l.starts_with("Intercept,")));
    assert!(regression.lines().any(|l| l.starts_with("nh3,")));
    assert!(regression.lines().any(|l| l.starts_with("pm25,")));
}

#[test]
fn stats_failure_short_circuits_with_consistent_inventory() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    // A duplicated predictor makes the design matrix rank deficient.
    cfg.regression.predictors = vec!["pm25".into(), "pm25".into()];
    let report = run_pipeline(&cfg).unwrap();
    assert!(!report.success);

    let status_of = |name: &str| {
        report
            .stages
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.status.clone())
            .unwrap()
    };
    assert!(matches!(status_of("fuse"), StageStatus::Completed));
    assert!(matches!(status_of("stats"), StageStatus::Failed(_)));
    assert!(matches!(status_of("spatial"), StageStatus::Skipped));
    assert!(matches!(status_of("train"), StageStatus::Skipped));
    assert!(matches!(status_of("evaluate"), StageStatus::Skipped));

    // Inventory matches what actually ran: fused table present, nothing
    // from the skipped stages, and the correlation matrix (written before
    // the regression failed) is allowed.
    assert!(report.artifacts.contains_key("fused.csv"));
    assert!(!report.artifacts.contains_key("tessellation.geojson"));
    assert!(!report.artifacts.contains_key("dbn_model.json"));
    assert!(!report.artifacts.contains_key("eval_summary.csv"));
    assert!(report.artifacts.contains_key("summary.txt"));
    for name in report.artifacts.keys() {
        assert!(dir.path().join(name).exists(), "{name} listed but missing");
    }
}

#[test]
fn config_referencing_excluded_channel_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    // co2 is generated constant and excluded during fusion.
    cfg.regression.predictors = vec!["co2".into()];
    match run_pipeline(&cfg) {
        Err(PipelineError::Config(msg)) => {
            assert!(msg.contains("co2"), "message should name the channel: {msg}");
            assert!(msg.contains("excluded"), "message should say why: {msg}");
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn unknown_classifier_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.eval.classifiers = vec!["svm".into()];
    match run_pipeline(&cfg) {
        Err(PipelineError::Config(msg)) => assert!(msg.contains("svm")),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn out_dir_falls_back_to_environment_variable() {
    // Process-global state: this is the only test touching the variable.
    let cfg = PipelineConfig::default();
    std::env::set_var(OUT_DIR_ENV, "/tmp/exposome-env-fallback");
    assert_eq!(
        cfg.resolved_out_dir(),
        std::path::PathBuf::from("/tmp/exposome-env-fallback")
    );
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(cfg.resolved_out_dir(), std::path::PathBuf::from("exposome_out"));

    let explicit = PipelineConfig {
        out_dir: Some("/tmp/explicit".into()),
        ..PipelineConfig::default()
    };
    std::env::set_var(OUT_DIR_ENV, "/tmp/exposome-env-fallback");
    assert_eq!(explicit.resolved_out_dir(), std::path::PathBuf::from("/tmp/explicit"));
    std::env::remove_var(OUT_DIR_ENV);
}

#[test]
fn manifest_input_round_trips_through_the_pipeline() {
    let session_dir = tempfile::tempdir().unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig { duration_s: 300, ..SynthConfig::default() };
    let session = exposome::ingest::generate_synthetic_session(&synth, 9).unwrap();
    let manifest = exposome::ingest::write_session(session_dir.path(), &session.bundle).unwrap();

    let mut cfg = quick_config(out_dir.path());
    cfg.manifest = Some(manifest);
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.success, "failed: {:?}", report.failed_stage());
    // Sessions loaded from disk have no planted truth to record.
    assert!(!report.artifacts.contains_key("planted_truth.json"));
}
