//! Experiment configuration, presets, runs, verification suites and sweeps.

pub mod config;
pub mod presets;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{AnalysisConfig, BatchMode, DatasetConfig, ExperimentConfig, Metric, ModelConfig, TrainingConfig, SCHEMA_VERSION};
pub use presets::{preset, sweep_preset, PRESET_NAMES, SWEEP_NAMES};
pub use run::{plot_run, run, sample_dataset, train_config, RunReport, Verdict};
pub use sweep::{run_sweep, Axis, SweepReport, SweepSpec};
pub use verify::{verify, Suite, SuiteReport};
