//! Numerical laboratory for the implicit bias of GD, signGD and Adam on
//! two-layer ReLU networks.
//!
//! The crate is split along the lines of the experiments it supports:
//!
//! * [`datasets`] — Gaussian-cluster, toy point-mass and Boolean staircase
//!   data, plus the Bayes-optimal rules for the first two.
//! * [`network`] and [`mlp`] — the fixed-head two-layer ReLU model used by the
//!   theory experiments and a small trainable MLP for the Boolean task.
//! * [`optim`] — GD / signGD / Adam update rules and the training loop.
//! * [`popgrad`] — closed-form and Monte Carlo population gradients.
//! * [`theory`] — limit-direction tables, regime checks and classifier errors.
//! * [`analysis`] — empirical directions, decision boundaries, accuracies,
//!   decoded correlations.
//! * [`experiment`] — configs, presets, verification suites and sweeps.

pub mod analysis;
pub mod boundary;
pub mod datasets;
pub mod error;
pub mod experiment;
pub mod logreg;
pub mod matrix;
pub mod mlp;
pub mod network;
pub mod normal;
pub mod optim;
pub mod popgrad;
pub mod quad;
pub mod rng;
pub mod svg;
pub mod theory;

pub use error::{Error, Result};

/// `sign` with the convention `sign(0) = +1` used for labels and predictions.
#[inline]
pub fn label_sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
