//! Empirical structure of trained nets: neuron directions and histograms,
//! convergence checks, agreement with a linear fit, accuracies, margins and
//! decoded correlations.

use serde::{Deserialize, Serialize};

use crate::datasets::{for_each_gaussian, sample_boolean, sample_hypercube, BooleanTaskSpec, Dataset, GaussianSpec};
use crate::logreg::{self, FitOptions};
use crate::matrix::{dot, norm, Matrix};
use crate::mlp::MlpNet;
use crate::network::TwoLayerNet;
use crate::rng;
use crate::theory::DirectionTable;
use crate::{label_sign, Error, Result};

/// Angle of `(w1, w2)` against the x1-axis, in (−π, π].
pub fn neuron_angle(w: &[f64]) -> f64 {
    let t = w[1].atan2(w[0]);
    if t <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        t
    }
}

/// Cosine similarity; 0 when either vector vanishes.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        (dot(a, b) / d).clamp(-1.0, 1.0)
    }
}

/// Angle between two vectors, accurate for nearly parallel inputs.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x / na - y / nb).powi(2);
        sum += (x / na + y / nb).powi(2);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronSnapshot {
    pub id: usize,
    pub angle: f64,
    pub norm: f64,
    pub head_sign: f64,
    /// Cosine to each of the supplied reference directions, in order.
    pub cosines: Vec<f64>,
}

pub fn snapshots(net: &TwoLayerNet, reference: &[[f64; 2]]) -> Vec<NeuronSnapshot> {
    net.weights()
        .iter_rows()
        .enumerate()
        .map(|(k, w)| NeuronSnapshot {
            id: k,
            angle: neuron_angle(w),
            norm: norm(w),
            head_sign: net.head_sign(k),
            cosines: reference.iter().map(|r| cosine(&w[..2], r)).collect(),
        })
        .collect()
}

/// Unit rows of `(W_T − W_0)/T`; zero rows stay zero.
pub fn limit_directions(initial: &Matrix, last: &Matrix) -> Result<Matrix> {
    if !initial.same_shape(last) {
        return Err(Error::DimensionMismatch {
            expected: initial.rows() * initial.cols(),
            got: last.rows() * last.cols(),
        });
    }
    let mut out = last.clone();
    for (k, row) in (0..out.rows()).zip(initial.iter_rows()) {
        let r = out.row_mut(k);
        for (v, w0) in r.iter_mut().zip(row) {
            *v -= w0;
        }
        let n = norm(r);
        if n > 0.0 {
            r.iter_mut().for_each(|v| *v /= n);
        }
    }
    Ok(out)
}

/// Largest per-neuron angle between two weight snapshots.
pub fn max_angular_change(earlier: &Matrix, later: &Matrix) -> f64 {
    earlier
        .iter_rows()
        .zip(later.iter_rows())
        .map(|(a, b)| angle_between(a, b))
        .fold(0.0, f64::max)
}

/// Tolerance of the "limit direction reached" gate, in radians.
pub const CONVERGENCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub max_angle: f64,
    pub from_step: usize,
    pub to_step: usize,
    pub converged: bool,
}

/// Compares the snapshot at 90% of training with the final weights.
pub fn convergence(log: &crate::optim::TrajectoryLog, last: &Matrix) -> Convergence {
    let max_angle = max_angular_change(&log.late, last);
    Convergence {
        max_angle,
        from_step: log.late_step,
        to_step: log.steps_done,
        converged: max_angle < CONVERGENCE_TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub label: String,
    pub direction: [f64; 2],
    pub predicted: f64,
    pub count: usize,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionHistogram {
    pub rows: Vec<HistogramRow>,
    pub unmatched: usize,
    pub unmatched_fraction: f64,
    pub total: usize,
}

impl DirectionHistogram {
    /// CSV `label,dx,dy,predicted,count,empirical` with a final unmatched row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,dx,dy,predicted,count,empirical\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.label, r.direction[0], r.direction[1], r.predicted, r.count, r.empirical
            ));
        }
        out.push_str(&format!("unmatched,,,0,{},{}\n", self.unmatched, self.unmatched_fraction));
        out
    }
}

/// Assigns each row (first two coordinates) to the table direction with the
/// largest cosine, restricted to entries whose first coordinate has the sign
/// of the neuron's head. Rows below `cos_threshold` stay unmatched.
pub fn direction_histogram_rows(
    rows: &Matrix,
    head_signs: &[f64],
    table: &DirectionTable,
    cos_threshold: f64,
) -> Result<DirectionHistogram> {
    if rows.rows() == 0 {
        return Err(Error::Empty("net"));
    }
    if head_signs.len() != rows.rows() {
        return Err(Error::DimensionMismatch {
            expected: rows.rows(),
            got: head_signs.len(),
        });
    }
    if !(cos_threshold > 0.9 && cos_threshold < 1.0) {
        return Err(Error::invalid("cos_threshold", format!("{cos_threshold} not in (0.9, 1)")));
    }
    let mut counts = vec![0usize; table.entries.len()];
    let mut unmatched = 0;
    for (w, &a) in rows.iter_rows().zip(head_signs) {
        let mut best: Option<(usize, f64)> = None;
        for (j, e) in table.entries.iter().enumerate() {
            if e.direction[0] != 0.0 && (e.direction[0] > 0.0) != (a > 0.0) {
                continue;
            }
            let c = cosine(&w[..2], &e.direction);
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        match best {
            Some((j, c)) if c > cos_threshold => counts[j] += 1,
            _ => unmatched += 1,
        }
    }
    let total = rows.rows();
    let rows = table
        .entries
        .iter()
        .zip(&counts)
        .map(|(e, &count)| HistogramRow {
            label: e.label.clone(),
            direction: e.direction,
            predicted: e.probability,
            count,
            empirical: count as f64 / total as f64,
        })
        .collect();
    Ok(DirectionHistogram {
        rows,
        unmatched,
        unmatched_fraction: unmatched as f64 / total as f64,
        total,
    })
}

pub fn direction_histogram(net: &TwoLayerNet, table: &DirectionTable, cos_threshold: f64) -> Result<DirectionHistogram> {
    direction_histogram_rows(net.weights(), &net.head_signs(), table, cos_threshold)
}

/// `k·√(p(1−p)/m)`.
pub fn binomial_tolerance(p: f64, m: usize, k: f64) -> f64 {
    k * (p * (1.0 - p) / m as f64).sqrt()
}

/// Mean of `|d1/d2|` over the selected limit directions, i.e. the `s` of
/// directions of the form `(s, ±1)/√(s²+1)`. `None` when nothing is selected.
pub fn estimate_s(directions: &Matrix, selected: &[usize]) -> Option<f64> {
    let vals: Vec<f64> = selected
        .iter()
        .map(|&k| directions.row(k))
        .filter(|d| d[1] != 0.0)
        .map(|d| (d[0] / d[1]).abs())
        .collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub agreement: f64,
    pub fit_converged: bool,
}

/// Fits a logistic regression to the net's own predicted labels on the
/// probe inputs and returns the fraction where the fit agrees with the net.
pub fn linear_agreement(net: &TwoLayerNet, probe: &Dataset) -> Result<Agreement> {
    linear_agreement_fn(|x| net.forward(x), probe)
}

pub fn linear_agreement_fn(f: impl Fn(&[f64]) -> f64, probe: &Dataset) -> Result<Agreement> {
    if probe.is_empty() {
        return Err(Error::Empty("probe set"));
    }
    let labels: Vec<f64> = (0..probe.len()).map(|i| label_sign(f(probe.x(i)))).collect();
    let model = logreg::fit(probe.inputs(), &labels, probe.dim(), &FitOptions::default())?;
    let hits = (0..probe.len())
        .filter(|&i| model.predict(probe.x(i)) == labels[i])
        .count();
    Ok(Agreement {
        agreement: hits as f64 / probe.len() as f64,
        fit_converged: model.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub samples: usize,
}

pub const MIN_TEST_SAMPLES: usize = 10_000;

/// Monte Carlo accuracy of an arbitrary classifier on fresh Gaussian data.
pub fn accuracy_of(f: impl Fn(&[f64]) -> f64, spec: &GaussianSpec, n: usize, seed: u64) -> Result<Estimate> {
    if n < MIN_TEST_SAMPLES {
        return Err(Error::invalid("n", format!("need >= {MIN_TEST_SAMPLES} test samples, got {n}")));
    }
    let mut r = rng::stream(seed);
    let mut hits = 0usize;
    for_each_gaussian(spec, n, &mut r, |x, y| {
        if label_sign(f(x)) == y {
            hits += 1;
        }
    });
    let p = hits as f64 / n as f64;
    Ok(Estimate {
        value: p,
        se: (p * (1.0 - p) / n as f64).sqrt(),
        samples: n,
    })
}

pub fn test_accuracy(net: &TwoLayerNet, spec: &GaussianSpec, n: usize, seed: u64) -> Result<Estimate> {
    accuracy_of(|x| net.forward(x), spec, n, seed)
}

/// Paired accuracy difference `acc(A) − acc(B)` on one shared sample stream.
pub fn accuracy_gap(a: &TwoLayerNet, b: &TwoLayerNet, spec: &GaussianSpec, n: usize, seed: u64) -> Result<Estimate> {
    accuracy_gap_fn(|x| a.forward(x), |x| b.forward(x), spec, n, seed)
}

pub fn accuracy_gap_fn(
    fa: impl Fn(&[f64]) -> f64,
    fb: impl Fn(&[f64]) -> f64,
    spec: &GaussianSpec,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if n < MIN_TEST_SAMPLES {
        return Err(Error::invalid("n", format!("need >= {MIN_TEST_SAMPLES} test samples, got {n}")));
    }
    let mut r = rng::stream(seed);
    let (mut s, mut s2) = (0i64, 0i64);
    for_each_gaussian(spec, n, &mut r, |x, y| {
        let d = (label_sign(fa(x)) == y) as i64 - (label_sign(fb(x)) == y) as i64;
        s += d;
        s2 += d * d;
    });
    let nf = n as f64;
    let mean = s as f64 / nf;
    let var = (s2 as f64 / nf - mean * mean).max(0.0);
    Ok(Estimate {
        value: mean,
        se: (var / nf).sqrt(),
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeTarget {
    /// Core staircase, scored on the uniform hypercube.
    Core,
    /// Spurious staircase, scored on the λ-mixture test distribution.
    Spurious,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedCorrelation {
    pub value: f64,
    pub se: f64,
    pub fit_converged: bool,
}

/// Refits the last layer of `net` by logistic regression on fresh uniform
/// hypercube samples labelled by the target staircase, then estimates
/// `E[target(x)·sign(f(x))]`.
pub fn decoded_correlation(
    net: &MlpNet,
    task: &BooleanTaskSpec,
    target: DecodeTarget,
    n_retrain: usize,
    n_eval: usize,
    seed: u64,
) -> Result<DecodedCorrelation> {
    task.validate()?;
    if net.input_dim() != task.dim {
        return Err(Error::DimensionMismatch {
            expected: task.dim,
            got: net.input_dim(),
        });
    }
    let label = |x: &[f64]| match target {
        DecodeTarget::Core => task.core(x),
        DecodeTarget::Spurious => task.spurious(x),
    };
    let train = sample_hypercube(task.dim, n_retrain, rng::derive_seed(seed, 0), label)?;
    let eval = match target {
        DecodeTarget::Core => sample_hypercube(task.dim, n_eval, rng::derive_seed(seed, 1), label)?,
        DecodeTarget::Spurious => {
            let mix = sample_boolean(task, n_eval, rng::derive_seed(seed, 1))?;
            let y: Vec<f64> = (0..mix.len()).map(|i| task.spurious(mix.x(i))).collect();
            Dataset::new(task.dim, mix.inputs().to_vec(), y, None)?
        }
    };
    decoded_correlation_on(net, &train, &eval)
}

/// Same as [`decoded_correlation`] with explicit retraining and scoring sets;
/// labels of `eval` are the target values.
pub fn decoded_correlation_on(net: &MlpNet, train: &Dataset, eval: &Dataset) -> Result<DecodedCorrelation> {
    if train.is_empty() || eval.is_empty() {
        return Err(Error::Empty("decoding data"));
    }
    let p = net.feature_dim();
    let features: Vec<f64> = (0..train.len()).flat_map(|i| net.features(train.x(i))).collect();
    let fit = logreg::fit(&features, train.labels(), p, &FitOptions::default())?;
    let mut decoded = net.clone();
    decoded.set_last_layer(&fit.weights, fit.bias)?;
    let n = eval.len() as f64;
    let vals: Vec<f64> = (0..eval.len()).map(|i| eval.y(i) * label_sign(decoded.forward(eval.x(i)))).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(DecodedCorrelation {
        value: mean,
        se: (var / n).sqrt(),
        fit_converged: fit.converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

/// Equal-width histogram over the data range (a unit window around the value
/// when all values coincide).
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins < 10 {
        return Err(Error::invalid("bins", format!("need >= 10, got {bins}")));
    }
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts })
}

pub fn margin_histogram(net: &TwoLayerNet, batch: &Dataset, bins: usize) -> Result<Histogram> {
    histogram(&net.margins(batch), bins)
}
