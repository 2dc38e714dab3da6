//! JSON experiment configuration.

use serde::{Deserialize, Serialize};

use crate::datasets::{BooleanTaskSpec, GaussianSpec, ToySpec};
use crate::mlp::Activation;
use crate::network::{HeadMode, LossKind};
use crate::optim::StepSpec;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Gaussian(GaussianSpec),
    Toy(ToySpec),
    Boolean(BooleanTaskSpec),
}

impl DatasetConfig {
    pub fn dim(&self) -> usize {
        match self {
            DatasetConfig::Gaussian(s) => s.dim,
            DatasetConfig::Toy(_) => 2,
            DatasetConfig::Boolean(s) => s.dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DatasetConfig::Gaussian(_) => "gaussian",
            DatasetConfig::Toy(_) => "toy",
            DatasetConfig::Boolean(_) => "boolean",
        }
    }
}

fn default_head() -> HeadMode {
    HeadMode::Balanced
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Fixed-head `Σ a_k relu(w_k·x)`; the input dimension comes from the dataset.
    TwoLayer {
        width: usize,
        alpha: f64,
        #[serde(default = "default_head")]
        head: HeadMode,
    },
    /// Fully trainable MLP with scalar output.
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchMode {
    /// Exact expected gradient (closed form or point masses).
    Population,
    /// Fresh Gaussian draws at every step.
    PopulationMc { samples_per_step: usize },
    /// Full-batch gradient on a fixed training sample.
    Full { samples: usize },
    /// Minibatches drawn with replacement from a fixed training sample.
    Minibatch { samples: usize, size: usize },
}

impl BatchMode {
    pub fn train_samples(&self) -> Option<usize> {
        match *self {
            BatchMode::Full { samples } | BatchMode::Minibatch { samples, .. } => Some(samples),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub steps: usize,
    pub batch: BatchMode,
    pub loss: LossKind,
    pub record_every: usize,
    #[serde(default)]
    pub target_loss: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Per-neuron angle and norm at every recorded step.
    Trajectory,
    /// Limit directions compared with the predicted ones.
    Directions,
    /// Decision boundary trace and SVG plots.
    Boundary,
    /// Test accuracy (and the Bayes rule's, where available).
    Accuracy,
    /// Agreement with the best linear fit of the net's own labels.
    Agreement,
    /// Histogram of training margins.
    Margins,
    /// Last-layer decoded correlation with the core and spurious targets.
    Decoded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub metrics: Vec<Metric>,
    #[serde(default = "defaults::test_samples")]
    pub test_samples: usize,
    #[serde(default = "defaults::probe_samples")]
    pub probe_samples: usize,
    #[serde(default = "defaults::resolution")]
    pub boundary_resolution: usize,
    #[serde(default = "defaults::cos_threshold")]
    pub cos_threshold: f64,
    #[serde(default = "defaults::margin_bins")]
    pub margin_bins: usize,
    #[serde(default = "defaults::decode_retrain")]
    pub decode_retrain: usize,
    #[serde(default = "defaults::decode_eval")]
    pub decode_eval: usize,
}

mod defaults {
    pub fn test_samples() -> usize {
        100_000
    }
    pub fn probe_samples() -> usize {
        20_000
    }
    pub fn resolution() -> usize {
        256
    }
    pub fn cos_threshold() -> f64 {
        0.99
    }
    pub fn margin_bins() -> usize {
        40
    }
    pub fn decode_retrain() -> usize {
        2000
    }
    pub fn decode_eval() -> usize {
        5000
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            metrics: Vec::new(),
            test_samples: defaults::test_samples(),
            probe_samples: defaults::probe_samples(),
            boundary_resolution: defaults::resolution(),
            cos_threshold: defaults::cos_threshold(),
            margin_bins: defaults::margin_bins(),
            decode_retrain: defaults::decode_retrain(),
            decode_eval: defaults::decode_eval(),
        }
    }
}

impl AnalysisConfig {
    pub fn has(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub optimizer: StepSpec,
    pub training: TrainingConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Output root; overridden by the CLI and `IBLAB_OUT`.
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn at(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

/// Re-roots a parameter error from a component's own validation.
fn nested(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => at(&format!("{prefix}.{name}"), reason),
        other => at(prefix, other.to_string()),
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            at(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(at(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(at("name", format!("{:?} must be non-empty and use [A-Za-z0-9._-]", self.name)));
        }
        match &self.dataset {
            DatasetConfig::Gaussian(s) => s.validate().map_err(|e| nested("dataset", e))?,
            DatasetConfig::Toy(s) => s.validate().map_err(|e| nested("dataset", e))?,
            DatasetConfig::Boolean(s) => s.validate().map_err(|e| nested("dataset", e))?,
        }
        self.optimizer.validate().map_err(|e| nested("optimizer", e))?;
        self.validate_model()?;
        self.validate_training()?;
        self.validate_analysis()
    }

    fn validate_model(&self) -> Result<()> {
        match &self.model {
            ModelConfig::TwoLayer { width, alpha, head } => {
                if *width == 0 {
                    return Err(at("model.width", "must be >= 1"));
                }
                if *head == HeadMode::Balanced && width % 2 != 0 {
                    return Err(at("model.width", format!("balanced head needs an even width, got {width}")));
                }
                if !(*alpha >= 0.0) || !alpha.is_finite() {
                    return Err(at("model.alpha", format!("must be finite and >= 0, got {alpha}")));
                }
            }
            ModelConfig::Mlp { hidden, activation, alpha } => {
                if hidden.is_empty() || hidden.contains(&0) {
                    return Err(at("model.hidden", "needs at least one non-empty hidden layer"));
                }
                if !(*alpha > 0.0) || !alpha.is_finite() {
                    return Err(at("model.alpha", format!("must be finite and > 0, got {alpha}")));
                }
                if let Activation::LeakyRelu { slope } = activation {
                    if !slope.is_finite() {
                        return Err(at("model.activation.slope", "must be finite"));
                    }
                }
                if matches!(self.dataset, DatasetConfig::Toy(_)) {
                    return Err(at("model.kind", "the toy data is only used with the two_layer model"));
                }
            }
        }
        Ok(())
    }

    fn validate_training(&self) -> Result<()> {
        let t = &self.training;
        if t.record_every == 0 {
            return Err(at("training.record_every", "must be >= 1"));
        }
        if let Some(target) = t.target_loss {
            if !target.is_finite() {
                return Err(at("training.target_loss", "must be finite"));
            }
        }
        let mlp = matches!(self.model, ModelConfig::Mlp { .. });
        match (t.batch, &self.dataset) {
            (BatchMode::Population, DatasetConfig::Gaussian(s)) => {
                if !s.is_isotropic() || t.loss != LossKind::Correlation {
                    return Err(at(
                        "training.batch.mode",
                        "closed-form population gradients need isotropic noise and the correlation loss; use population_mc",
                    ));
                }
            }
            (BatchMode::Population, DatasetConfig::Toy(_)) => {}
            (BatchMode::Population | BatchMode::PopulationMc { .. }, DatasetConfig::Boolean(_)) => {
                return Err(at("training.batch.mode", "Boolean data needs a finite training sample"));
            }
            (BatchMode::PopulationMc { samples_per_step }, DatasetConfig::Gaussian(_)) => {
                if samples_per_step == 0 {
                    return Err(at("training.batch.samples_per_step", "must be >= 1"));
                }
            }
            (BatchMode::PopulationMc { .. }, DatasetConfig::Toy(_)) => {
                return Err(at("training.batch.mode", "toy population gradients are exact; use population"));
            }
            (BatchMode::Full { samples }, _) => {
                if samples == 0 {
                    return Err(at("training.batch.samples", "must be >= 1"));
                }
            }
            (BatchMode::Minibatch { samples, size }, _) => {
                if samples == 0 {
                    return Err(at("training.batch.samples", "must be >= 1"));
                }
                if size == 0 {
                    return Err(at("training.batch.size", "must be >= 1"));
                }
            }
        }
        if mlp && matches!(t.batch, BatchMode::Population | BatchMode::PopulationMc { .. }) {
            return Err(at("training.batch.mode", "the MLP trains on a finite sample"));
        }
        Ok(())
    }

    fn validate_analysis(&self) -> Result<()> {
        let a = &self.analysis;
        let mlp = matches!(self.model, ModelConfig::Mlp { .. });
        for (i, m) in a.metrics.iter().enumerate() {
            let path = format!("analysis.metrics[{i}]");
            match m {
                Metric::Trajectory | Metric::Directions | Metric::Boundary | Metric::Agreement if mlp => {
                    return Err(at(&path, format!("{m:?} needs the two_layer model")));
                }
                Metric::Decoded if !mlp || !matches!(self.dataset, DatasetConfig::Boolean(_)) => {
                    return Err(at(&path, "decoded needs the mlp model on Boolean data"));
                }
                Metric::Directions if matches!(self.dataset, DatasetConfig::Boolean(_)) => {
                    return Err(at(&path, "no predicted directions for Boolean data"));
                }
                Metric::Margins if self.training.batch.train_samples().is_none() => {
                    return Err(at(&path, "margins need a finite training sample"));
                }
                _ => {}
            }
        }
        if !(a.cos_threshold > 0.9 && a.cos_threshold < 1.0) {
            return Err(at("analysis.cos_threshold", format!("{} not in (0.9, 1)", a.cos_threshold)));
        }
        if a.test_samples < crate::analysis::MIN_TEST_SAMPLES {
            return Err(at(
                "analysis.test_samples",
                format!("need >= {}, got {}", crate::analysis::MIN_TEST_SAMPLES, a.test_samples),
            ));
        }
        if a.probe_samples == 0 {
            return Err(at("analysis.probe_samples", "must be >= 1"));
        }
        if a.boundary_resolution < crate::boundary::MIN_RESOLUTION {
            return Err(at(
                "analysis.boundary_resolution",
                format!("need >= {}, got {}", crate::boundary::MIN_RESOLUTION, a.boundary_resolution),
            ));
        }
        if a.margin_bins < 10 {
            return Err(at("analysis.margin_bins", "need >= 10"));
        }
        if a.decode_retrain == 0 || a.decode_eval == 0 {
            return Err(at("analysis.decode_retrain", "decoding sample sizes must be >= 1"));
        }
        Ok(())
    }

    /// Network input dimension.
    pub fn input_dim(&self) -> usize {
        self.dataset.dim()
    }
}
