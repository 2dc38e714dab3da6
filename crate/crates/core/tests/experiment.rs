use iblab::experiment::{preset, run, run_sweep, Axis, ExperimentConfig, SweepSpec, PRESET_NAMES};
use iblab::Error;

/// A seconds-scale Gaussian population run.
fn small(name: &str) -> ExperimentConfig {
    let mut cfg = preset("fig2-gd").unwrap();
    cfg.name = name.into();
    cfg.training.steps = 300;
    cfg.training.record_every = 50;
    if let iblab::experiment::ModelConfig::TwoLayer { width, .. } = &mut cfg.model {
        *width = 10;
    }
    cfg.analysis.test_samples = 10_000;
    cfg.analysis.probe_samples = 500;
    cfg.analysis.boundary_resolution = iblab::boundary::MIN_RESOLUTION;
    cfg
}

fn config_path(text: &str) -> String {
    match ExperimentConfig::from_json(text) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn presets_round_trip_through_json() {
    for name in PRESET_NAMES {
        let cfg = preset(name).unwrap();
        let text = cfg.to_json();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg, "{name}");
        assert_eq!(ExperimentConfig::from_json(&text).unwrap().to_json(), text, "{name}");
    }
}

#[test]
fn unknown_field_reports_its_path() {
    let mut v: serde_json::Value = serde_json::from_str(&small("x").to_json()).unwrap();
    v["model"]["widht"] = 3.into();
    assert_eq!(config_path(&v.to_string()), "model");
}

#[test]
fn wrong_type_reports_its_path() {
    let mut v: serde_json::Value = serde_json::from_str(&small("x").to_json()).unwrap();
    v["training"]["steps"] = "many".into();
    assert_eq!(config_path(&v.to_string()), "training.steps");
}

#[test]
fn invalid_values_report_field_paths() {
    let mut v: serde_json::Value = serde_json::from_str(&small("x").to_json()).unwrap();
    v["model"]["width"] = 7.into();
    assert_eq!(config_path(&v.to_string()), "model.width");

    let mut v: serde_json::Value = serde_json::from_str(&small("x").to_json()).unwrap();
    v["analysis"]["metrics"] = serde_json::json!(["accuracy", "decoded"]);
    assert_eq!(config_path(&v.to_string()), "analysis.metrics[1]");

    let mut v: serde_json::Value = serde_json::from_str(&small("x").to_json()).unwrap();
    v["schema_version"] = 99.into();
    assert_eq!(config_path(&v.to_string()), "schema_version");
}

#[test]
fn run_writes_a_deterministic_report() {
    let cfg = small("det");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run(&cfg, a.path()).unwrap();
    let rb = run(&cfg, b.path()).unwrap();
    assert_eq!(ra, rb);
    assert!(ra.files.contains(&"report.json".to_string()));
    // timing.json holds wall-clock times and is the one artifact allowed to differ.
    for f in ra.files.iter().filter(|f| *f != "timing.json") {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
    let back = ExperimentConfig::from_json(&std::fs::read_to_string(a.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn seed_changes_the_run() {
    let mut cfg = small("seeded");
    let a = tempfile::tempdir().unwrap();
    let ra = run(&cfg, a.path()).unwrap();
    cfg.seed += 1;
    let rb = run(&cfg, a.path()).unwrap();
    assert_ne!(ra.training.final_loss, rb.training.final_loss);
}

#[test]
fn sweep_keeps_going_past_a_failed_point() {
    let spec = SweepSpec {
        template: small("sw"),
        axes: vec![Axis {
            paths: vec!["optimizer.eta".into()],
            values: vec![0.1.into(), 0.2.into(), 0.3.into()],
        }],
    };
    let dir = tempfile::tempdir().unwrap();
    // A plain file where point 1 wants its directory makes that point fail.
    std::fs::write(dir.path().join("sw-1"), b"").unwrap();
    let report = run_sweep(&spec, dir.path(), 2).unwrap();
    assert_eq!(report.outcomes.len(), 3);
    assert_eq!(report.failures, 1);
    assert!(report.outcomes[1].error.is_some());
    assert!(report.outcomes[0].report.is_some() && report.outcomes[2].report.is_some());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("index,name,optimizer.eta,status"));
    assert!(rows[2].contains(",failed,"));
    assert!(dir.path().join("sw-2").join("report.json").exists());
}

#[test]
fn sweep_expansion_is_row_major() {
    let spec = SweepSpec {
        template: small("grid"),
        axes: vec![
            Axis {
                paths: vec!["seed".into()],
                values: vec![1.into(), 2.into()],
            },
            Axis {
                paths: vec!["optimizer.beta1".into(), "optimizer.beta2".into()],
                values: vec![0.5.into(), 0.9.into(), 0.99.into()],
            },
        ],
    };
    let pts = spec.expand().unwrap();
    assert_eq!(pts.len(), 6);
    assert_eq!(pts[4].config.seed, 2);
    assert_eq!(pts[4].config.optimizer.beta1, 0.9);
    assert_eq!(pts[4].config.optimizer.beta2, 0.9);
    assert_eq!(pts[4].config.name, "grid-4");
    let back = SweepSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
}
