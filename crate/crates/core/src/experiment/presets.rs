//! Named configurations for the standard experiments.

use super::config::*;
use super::sweep::{Axis, SweepSpec};
use crate::datasets::{BooleanTaskSpec, GaussianSpec, ToySpec};
use crate::mlp::Activation;
use crate::network::{HeadMode, LossKind};
use crate::optim::StepSpec;
use crate::{Error, Result};

pub const PRESET_NAMES: &[&str] = &[
    "fig2-gd",
    "fig2-adam",
    "theorem1",
    "theorem2",
    "toy-gd",
    "toy-signgd",
    "toy-adam",
    "fig1-gd",
    "fig1-adam",
    "boolean-adam",
    "boolean-sgd",
];

pub const SWEEP_NAMES: &[&str] = &["beta-sweep", "boolean-seeds"];

fn base(name: &str, dataset: DatasetConfig, model: ModelConfig, optimizer: StepSpec, training: TrainingConfig, metrics: Vec<Metric>) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        seed: 0,
        dataset,
        model,
        optimizer,
        training,
        analysis: AnalysisConfig {
            metrics,
            ..AnalysisConfig::default()
        },
        output_dir: None,
    }
}

fn population(steps: usize, record_every: usize) -> TrainingConfig {
    TrainingConfig {
        steps,
        batch: BatchMode::Population,
        loss: LossKind::Correlation,
        record_every,
        target_loss: None,
    }
}

fn adam_beta(eta: f64, beta: f64) -> StepSpec {
    StepSpec::adam(eta, beta, beta, 0.0)
}

/// Isotropic Gaussian clusters with population gradients, 100 neurons.
fn gaussian_population(name: &str, mu: f64, alpha: f64, optimizer: StepSpec, seed: u64) -> ExperimentConfig {
    let spec = GaussianSpec::isotropic(mu, 2.0, 0.1, 2).expect("valid preset");
    let mut cfg = base(
        name,
        DatasetConfig::Gaussian(spec),
        ModelConfig::TwoLayer {
            width: 100,
            alpha,
            head: HeadMode::Balanced,
        },
        optimizer,
        population(20_000, 100),
        vec![Metric::Trajectory, Metric::Directions, Metric::Boundary, Metric::Accuracy, Metric::Agreement],
    );
    cfg.seed = seed;
    cfg
}

fn toy(name: &str, optimizer: StepSpec, alpha: f64, steps: usize) -> ExperimentConfig {
    let mut cfg = base(
        name,
        DatasetConfig::Toy(ToySpec::new(0.3, 2.0).expect("valid preset")),
        ModelConfig::TwoLayer {
            width: 10_000,
            alpha,
            head: HeadMode::Balanced,
        },
        optimizer,
        population(steps, 1000),
        vec![Metric::Directions, Metric::Boundary],
    );
    cfg.seed = 1;
    cfg
}

/// Finite Gaussian sample, logistic loss, trained to a common loss level.
fn finite_gaussian(name: &str, optimizer: StepSpec, steps: usize) -> ExperimentConfig {
    let spec = GaussianSpec::new(0.3, 2.0, 0.2, 0.15, 0.0, 2).expect("valid preset");
    base(
        name,
        DatasetConfig::Gaussian(spec),
        ModelConfig::TwoLayer {
            width: 1000,
            alpha: 1e-3,
            head: HeadMode::Balanced,
        },
        optimizer,
        TrainingConfig {
            steps,
            batch: BatchMode::Full { samples: 5000 },
            loss: LossKind::Logistic,
            record_every: 50,
            target_loss: Some(FIG1_TARGET_LOSS),
        },
        vec![Metric::Boundary, Metric::Accuracy, Metric::Agreement, Metric::Margins],
    )
}

/// Common training-loss level for the finite-sample Gaussian comparison.
pub const FIG1_TARGET_LOSS: f64 = 0.3;

fn boolean(name: &str, optimizer: StepSpec) -> ExperimentConfig {
    let mut cfg = base(
        name,
        DatasetConfig::Boolean(BooleanTaskSpec::new(50, 8, 1, 0.9).expect("valid preset")),
        ModelConfig::Mlp {
            hidden: vec![20, 20],
            activation: Activation::LeakyRelu { slope: 0.01 },
            alpha: 1.0,
        },
        optimizer,
        TrainingConfig {
            steps: 100_000,
            batch: BatchMode::Minibatch { samples: 10_000, size: 64 },
            loss: LossKind::Logistic,
            record_every: 1000,
            target_loss: None,
        },
        vec![Metric::Accuracy, Metric::Decoded],
    );
    cfg.analysis.test_samples = 10_000;
    cfg
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    Ok(match name {
        "fig2-gd" => gaussian_population(name, 0.3, 1e-3, StepSpec::gd(0.1), 3),
        "fig2-adam" => gaussian_population(name, 0.3, 1e-3, adam_beta(1e-4, 0.9999), 3),
        "theorem1" => {
            let mut c = gaussian_population(name, 0.3, 1e-3, StepSpec::gd(0.1), 3);
            c.analysis.metrics = vec![Metric::Directions, Metric::Accuracy];
            c
        }
        "theorem2" => {
            let mut c = gaussian_population(name, 0.12, 1e-4, StepSpec::signgd(1e-3), 3);
            c.analysis.metrics = vec![Metric::Directions, Metric::Accuracy];
            c
        }
        "toy-gd" => toy(name, StepSpec::gd(1.0), 1e-4, 5000),
        "toy-signgd" => toy(name, StepSpec::signgd(1e-3), 1e-5, 5000),
        "toy-adam" => toy(name, adam_beta(1e-3, 0.9999), 1e-5, 15_000),
        "fig1-gd" => finite_gaussian(name, StepSpec::gd(0.1), 4000),
        "fig1-adam" => finite_gaussian(name, adam_beta(1e-4, 0.9999), 8000),
        "boolean-adam" => boolean(name, StepSpec::adam(0.03, 0.9, 0.999, 1e-8)),
        "boolean-sgd" => boolean(name, StepSpec::gd(1.0)),
        _ => {
            return Err(Error::Config {
                path: "preset".into(),
                reason: format!("unknown preset {name:?}; known: {}", PRESET_NAMES.join(", ")),
            })
        }
    })
}

pub fn sweep_preset(name: &str) -> Result<SweepSpec> {
    Ok(match name {
        "beta-sweep" => SweepSpec {
            template: preset("toy-adam")?,
            axes: vec![Axis {
                paths: vec!["optimizer.beta1".into(), "optimizer.beta2".into()],
                values: vec![0.9.into(), 0.99.into(), 0.9999.into()],
            }],
        },
        "boolean-seeds" => SweepSpec {
            template: preset("boolean-adam")?,
            axes: vec![
                Axis {
                    paths: vec!["seed".into()],
                    values: (0..5u64).map(Into::into).collect(),
                },
                Axis {
                    paths: vec!["optimizer".into()],
                    values: vec![
                        serde_json::to_value(StepSpec::adam(0.03, 0.9, 0.999, 1e-8)).expect("serializes"),
                        serde_json::to_value(StepSpec::gd(1.0)).expect("serializes"),
                    ],
                },
            ],
        },
        _ => {
            return Err(Error::Config {
                path: "sweep".into(),
                reason: format!("unknown sweep {name:?}; known: {}", SWEEP_NAMES.join(", ")),
            })
        }
    })
}
