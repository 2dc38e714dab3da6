//! Verification suites: each one re-derives a claim numerically and returns
//! a verdict table.

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{BatchMode, DatasetConfig, ExperimentConfig, ModelConfig};
use super::presets::preset;
use super::run::{directions, run, sample_dataset, seeds, train_config, TrainedModel, Verdict};
use crate::analysis::{accuracy_gap, accuracy_of, convergence, decoded_correlation, DecodeTarget};
use crate::datasets::{sample_gaussian, BooleanTaskSpec, GaussianSpec};
use crate::mlp::{train_mlp, Activation, MlpNet, MlpTrainSettings};
use crate::network::{init_net, HeadMode, LossKind, TwoLayerNet};
use crate::optim::{signgd_step, AdamState, Algorithm};
use crate::popgrad::{mc_grad, population_grad};
use crate::rng::{derive_seed, stream};
use crate::theory::{linear_error, piecewise_error, predicted_toy_table, theorem3_grid};
use crate::{label_sign, Error, Result};

/// Pinned tolerances of the suites.
pub mod tol {
    pub const PROP2_SAMPLES: usize = 1_000_000;
    pub const PROP2_CONFIGS: usize = 100;
    pub const PROP2_Z: f64 = 4.0;
    pub const PROP2_FAILURE_RATE: f64 = 0.01;
    pub const ADAM_FIRST_STEP_TRIALS: usize = 1000;
    pub const ADAM_BETA0_STEPS: usize = 500;
    pub const ADAM_BETA0_TOL: f64 = 1e-12;
    pub const ADAM_CONST_STEPS: usize = 100;
    pub const ADAM_CONST_TOL: f64 = 1e-10;
    pub const THEOREM1_SHARE: f64 = 0.99;
    pub const COS_THRESHOLD: f64 = 0.99;
    pub const TOY_SE_MULTIPLE: f64 = 3.0;
    pub const THEOREM3_GRID: usize = 10;
    pub const THEOREM3_C: (f64, f64) = (0.8, 4.0);
    pub const THEOREM3_QUAD_TOL: f64 = 1e-8;
    pub const THEOREM3_MC_POINTS: usize = 20;
    pub const THEOREM3_MC_SAMPLES: usize = 2_000_000;
    pub const THEOREM3_MC_Z: f64 = 4.0;
    pub const GAP_SEEDS: u64 = 5;
    pub const GAP_TEST_SAMPLES: usize = 500_000;
    pub const BOOLEAN_SEEDS: u64 = 5;
    pub const FD_REL_TOL: f64 = 1e-4;
    /// Largest number of times a run is extended (steps doubled) while
    /// waiting for the convergence gate.
    pub const MAX_DOUBLINGS: u32 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Prop2,
    AdamIdentities,
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
    FiniteSample,
    Boolean,
    Invariants,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Prop2,
        Suite::AdamIdentities,
        Suite::Theorem1,
        Suite::Theorem2,
        Suite::Theorem3,
        Suite::Theorem4,
        Suite::FiniteSample,
        Suite::Boolean,
        Suite::Invariants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prop2 => "prop2",
            Suite::AdamIdentities => "adam-identities",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Theorem3 => "theorem3",
            Suite::Theorem4 => "theorem4",
            Suite::FiniteSample => "finite-sample",
            Suite::Boolean => "boolean",
            Suite::Invariants => "invariants",
        }
    }

    pub fn parse(name: &str) -> Result<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| Error::Config {
            path: "suite".into(),
            reason: format!(
                "unknown suite {name:?}; known: {}",
                Suite::ALL.map(|s| s.name()).join(", ")
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Verdict>,
    /// `(file name, CSV contents)` of supporting tables.
    pub tables: Vec<(String, String)>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite: suite.name().into(),
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, value: f64, threshold: impl Into<String>, detail: impl Into<String>) {
        self.checks.push(Verdict {
            name: name.into(),
            passed,
            value,
            threshold: threshold.into(),
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// Fixed-width text table, one line per check.
    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut out = format!("suite {}: {}\n", self.suite, if self.passed() { "PASS" } else { "FAIL" });
        for c in &self.checks {
            out.push_str(&format!(
                "  {} {:<w$}  value {:<14.6e} need {}  {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold,
                c.detail
            ));
        }
        out
    }

    /// Writes `verdicts.json`, `verdicts.txt` and the supporting tables.
    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::datasets::write_file(&dir.join("verdicts.json"), serde_json::to_string_pretty(self)?.as_bytes())?;
        crate::datasets::write_file(&dir.join("verdicts.txt"), self.table().as_bytes())?;
        for (name, csv) in &self.tables {
            crate::datasets::write_file(&dir.join(name), csv.as_bytes())?;
        }
        Ok(())
    }
}

pub fn verify(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Prop2 => prop2(seed),
        Suite::AdamIdentities => adam_identities(seed),
        Suite::Theorem1 => gaussian_theorem(Suite::Theorem1, "theorem1"),
        Suite::Theorem2 => gaussian_theorem(Suite::Theorem2, "theorem2"),
        Suite::Theorem3 => theorem3(seed),
        Suite::Theorem4 => theorem4(),
        Suite::FiniteSample => finite_sample(seed),
        Suite::Boolean => boolean(seed),
        Suite::Invariants => invariants(seed),
    }
}

fn uniform(r: &mut crate::rng::Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

/// Closed-form population gradient against plain Monte Carlo on random
/// isotropic specs and neurons.
fn prop2(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Prop2);
    let mut r = stream(seed);
    let mut csv = String::from("config_id,coord,closed_form,mc_mean,mc_se,z_score\n");
    let mut failed_configs = 0;
    let mut worst: f64 = 0.0;
    for id in 0..tol::PROP2_CONFIGS {
        let dim = [2, 3, 5][r.random_range(0..3)];
        let omega = uniform(&mut r, 1.2, 4.0);
        let sigma = uniform(&mut r, 0.1, 1.0);
        let mu = uniform(&mut r, 0.5, 4.0) * sigma;
        let spec = GaussianSpec::isotropic(mu, omega, sigma, dim)?;
        let w: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
        let a = if r.random::<bool>() { 1.0 } else { -1.0 };
        let cf = population_grad(&spec, &w, a)?;
        let mc = mc_grad(&spec, &w, a, tol::PROP2_SAMPLES, derive_seed(seed, 1000 + id as u64))?;
        let mut bad = false;
        for j in 0..dim {
            let z = if mc.se[j] > 0.0 { (mc.mean[j] - cf[j]) / mc.se[j] } else { 0.0 };
            worst = worst.max(z.abs());
            bad |= z.abs() >= tol::PROP2_Z;
            csv.push_str(&format!("{id},{j},{},{},{},{z}\n", cf[j], mc.mean[j], mc.se[j]));
        }
        failed_configs += usize::from(bad);
    }
    let rate = failed_configs as f64 / tol::PROP2_CONFIGS as f64;
    rep.check(
        "max |z| over coordinates",
        worst < tol::PROP2_Z,
        worst,
        format!("< {}", tol::PROP2_Z),
        format!("{} configs, n = {}", tol::PROP2_CONFIGS, tol::PROP2_SAMPLES),
    );
    rep.check(
        "config failure rate",
        rate < tol::PROP2_FAILURE_RATE,
        rate,
        format!("< {}", tol::PROP2_FAILURE_RATE),
        format!("{failed_configs} configs with some |z| >= {}", tol::PROP2_Z),
    );
    rep.tables.push(("prop2_oracle.csv".into(), csv));
    Ok(rep)
}

fn random_grad(r: &mut crate::rng::Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| {
            // exact zeros exercise the sign(0) = 0 branch
            if r.random::<f64>() < 0.1 {
                0.0
            } else {
                let z: f64 = r.sample(StandardNormal);
                z * 10f64.powf(uniform(r, -3.0, 3.0))
            }
        })
        .collect()
}

fn random_beta(r: &mut crate::rng::Rng) -> f64 {
    match r.random_range(0..4) {
        0 => 0.9999,
        1 => 0.0,
        _ => r.random::<f64>() * 0.999_999,
    }
}

fn adam_identities(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::AdamIdentities);
    let mut r = stream(seed);
    let len = 16;

    let mut mismatches = 0;
    for _ in 0..tol::ADAM_FIRST_STEP_TRIALS {
        let eta = 10f64.powf(uniform(&mut r, -5.0, 0.0));
        let w0: Vec<f64> = (0..len).map(|_| r.sample(StandardNormal)).collect();
        let g = random_grad(&mut r, len);
        let (mut wa, mut ws) = (w0.clone(), w0);
        let mut adam = AdamState::new(len, random_beta(&mut r), random_beta(&mut r), 0.0);
        adam.step(&mut wa, &g, eta);
        signgd_step(&mut ws, &g, eta);
        mismatches += usize::from(wa != ws);
    }
    rep.check(
        "first Adam step == signGD step",
        mismatches == 0,
        mismatches as f64,
        "0 mismatches (exact)",
        format!("{} random gradients, random betas", tol::ADAM_FIRST_STEP_TRIALS),
    );

    let eta = 1e-2;
    let w0: Vec<f64> = (0..len).map(|_| r.sample(StandardNormal)).collect();
    let (mut wa, mut ws) = (w0.clone(), w0);
    let mut adam = AdamState::new(len, 0.0, 0.0, 0.0);
    let mut dev: f64 = 0.0;
    for _ in 0..tol::ADAM_BETA0_STEPS {
        let g = random_grad(&mut r, len);
        adam.step(&mut wa, &g, eta);
        signgd_step(&mut ws, &g, eta);
        dev = wa.iter().zip(&ws).map(|(a, b)| (a - b).abs()).fold(dev, f64::max);
    }
    rep.check(
        "beta = 0 Adam tracks signGD",
        dev <= tol::ADAM_BETA0_TOL,
        dev,
        format!("<= {:e}", tol::ADAM_BETA0_TOL),
        format!("{} steps of fresh random gradients", tol::ADAM_BETA0_STEPS),
    );

    let mut dev: f64 = 0.0;
    for _ in 0..20 {
        let g = random_grad(&mut r, len);
        let w0: Vec<f64> = (0..len).map(|_| r.sample(StandardNormal)).collect();
        let (mut wa, mut ws) = (w0.clone(), w0);
        let mut adam = AdamState::new(len, random_beta(&mut r), random_beta(&mut r), 0.0);
        for _ in 0..tol::ADAM_CONST_STEPS {
            adam.step(&mut wa, &g, eta);
            signgd_step(&mut ws, &g, eta);
            dev = wa.iter().zip(&ws).map(|(a, b)| (a - b).abs()).fold(dev, f64::max);
        }
    }
    rep.check(
        "constant-gradient Adam == signGD",
        dev <= tol::ADAM_CONST_TOL,
        dev,
        format!("<= {:e}", tol::ADAM_CONST_TOL),
        format!("20 gradients x {} steps, random betas", tol::ADAM_CONST_STEPS),
    );
    Ok(rep)
}

/// Trains `cfg`, doubling the horizon until the convergence gate passes (at
/// most [`tol::MAX_DOUBLINGS`] times).
fn train_until_converged(cfg: &ExperimentConfig) -> Result<(ExperimentConfig, TwoLayerNet, TwoLayerNet, crate::optim::TrajectoryLog)> {
    let mut cfg = cfg.clone();
    let mut doublings = 0;
    loop {
        let trained = train_config(&cfg)?;
        let TrainedModel::TwoLayer { net, initial, log } = trained.model else {
            unreachable!("two-layer preset")
        };
        if convergence(&log, net.weights()).converged || doublings == tol::MAX_DOUBLINGS {
            return Ok((cfg, net, initial, log));
        }
        cfg.training.steps *= 2;
        doublings += 1;
    }
}

fn gaussian_theorem(suite: Suite, name: &str) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(suite);
    let cfg = preset(name)?;
    let (cfg, net, initial, log) = train_until_converged(&cfg)?;
    let conv = convergence(&log, net.weights());
    let mut verdicts = Vec::new();
    let d = directions(&cfg, &net, &initial, &conv, &mut verdicts)?;
    rep.checks.extend(verdicts);
    let regime = d.regime.expect("Gaussian data");
    let (hyp, flags) = match suite {
        Suite::Theorem1 => (regime.theorem1(), "isotropic, omega >= 2, mu/sigma >= 0.8"),
        _ => (regime.theorem2(), "isotropic, omega >= 2, 0.8 <= mu/sigma <= 1.5, init < eta/2"),
    };
    rep.check("hypotheses hold", hyp, f64::from(u8::from(hyp)), "true", flags);
    let mut csv = String::from("neuron,head,dx,dy,init_sin_sign\n");
    let dirs = crate::analysis::limit_directions(initial.weights(), net.weights())?;
    for k in 0..net.width() {
        let w = dirs.row(k);
        csv.push_str(&format!("{k},{},{},{},{}\n", net.head_sign(k), w[0], w[1], label_sign(initial.neuron(k)[1])));
    }
    rep.tables.push((format!("{name}_directions.csv"), csv));
    Ok(rep)
}

fn theorem4() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Theorem4);
    for name in ["toy-gd", "toy-signgd", "toy-adam"] {
        let (cfg, net, initial, log) = train_until_converged(&preset(name)?)?;
        let conv = convergence(&log, net.weights());
        let mut verdicts = Vec::new();
        let d = directions(&cfg, &net, &initial, &conv, &mut verdicts)?;
        for mut v in verdicts {
            v.name = format!("{name}: {}", v.name);
            rep.checks.push(v);
        }
        if let Some(h) = &d.histogram {
            for row in &h.rows {
                let tol = crate::analysis::binomial_tolerance(row.predicted, h.total, tol::TOY_SE_MULTIPLE);
                let err = (row.empirical - row.predicted).abs();
                rep.check(
                    &format!("{name}: {}", row.label),
                    err <= tol,
                    row.empirical,
                    format!("{:.5} +- {tol:.5}", row.predicted),
                    format!("count {}", row.count),
                );
            }
            rep.tables.push((format!("{name}_histogram.csv"), h.to_csv()));
        }
    }
    // the table itself must be a distribution for every algorithm
    for alg in [Algorithm::Gd, Algorithm::SignGd, Algorithm::Adam] {
        let t = predicted_toy_table(alg, 2.0, 0.9);
        rep.check(
            &format!("{} table normalized", alg.name()),
            t.validate().is_ok(),
            t.total_probability(),
            "1",
            "",
        );
    }
    Ok(rep)
}

fn theorem3(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Theorem3);
    let (c_lo, c_hi) = tol::THEOREM3_C;
    let grid = theorem3_grid(tol::THEOREM3_GRID, c_lo, c_hi)?;
    let mut csv = String::from("omega,kappa,ratio_factor,in_regime,piecewise,linear,gap,ln_ratio,abs_error\n");
    let mut in_regime = Vec::new();
    let mut positive = 0;
    let mut max_err: f64 = 0.0;
    for p in &grid {
        let g = crate::theory::theorem3_gap(&p.spec)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            p.omega, p.kappa, p.ratio_factor, g.regime_ok, g.piecewise.value, g.linear, g.gap, g.ln_ratio, g.piecewise.abs_error
        ));
        max_err = max_err.max(g.piecewise.abs_error);
        if g.regime_ok {
            if !(g.ln_ratio < 0.0) {
                positive += 1;
            }
            in_regime.push((p.spec, g.piecewise.value));
        }
    }
    rep.tables.push(("theorem3_grid.csv".into(), csv));
    rep.check(
        "in-regime points",
        !in_regime.is_empty(),
        in_regime.len() as f64,
        "> 0",
        format!("{} grid points", grid.len()),
    );
    rep.check(
        "gap < 0 at every in-regime point",
        positive == 0,
        positive as f64,
        "0 violations",
        "sign read from ln(piecewise / linear)",
    );
    rep.check(
        "quadrature abs error",
        max_err < tol::THEOREM3_QUAD_TOL,
        max_err,
        format!("< {:e}", tol::THEOREM3_QUAD_TOL),
        "",
    );

    // Monte Carlo at points with errors large enough to resolve
    let moderate: Vec<_> = in_regime.iter().filter(|(_, v)| (1e-3..=0.3).contains(v)).collect();
    let k = tol::THEOREM3_MC_POINTS.min(moderate.len());
    let mut mc_csv = String::from("point,rule,quadrature,mc,se,z\n");
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let (spec, _) = moderate[i * moderate.len() / k];
        let n = tol::THEOREM3_MC_SAMPLES;
        for (rule, exact) in [
            ("piecewise(3,1)", piecewise_error(spec, 3.0, 1.0)?.value),
            ("linear(1,0)", linear_error(spec, 1.0, 0.0)?),
        ] {
            let f = |x: &[f64]| if rule.starts_with("piecewise") { 3.0 * x[0] + x[1].abs() } else { x[0] };
            let acc = accuracy_of(f, spec, n, derive_seed(seed, 2000 + i as u64))?;
            let mc = 1.0 - acc.value;
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            let z = (mc - exact) / se;
            worst = worst.max(z.abs());
            mc_csv.push_str(&format!("{i},{rule},{exact},{mc},{se},{z}\n"));
        }
    }
    rep.check(
        "Monte Carlo cross-check",
        k == tol::THEOREM3_MC_POINTS && worst < tol::THEOREM3_MC_Z,
        worst,
        format!("max |z| < {} at {} points", tol::THEOREM3_MC_Z, tol::THEOREM3_MC_POINTS),
        format!("{k} points, n = {} each", tol::THEOREM3_MC_SAMPLES),
    );
    rep.tables.push(("theorem3_mc.csv".into(), mc_csv));
    Ok(rep)
}

fn with_seed(name: &str, seed: u64) -> Result<ExperimentConfig> {
    let mut cfg = preset(name)?;
    cfg.seed = seed;
    Ok(cfg)
}

/// GD and Adam trained from the same sample and initialization to the same
/// training loss; paired test-accuracy gap on a shared test stream.
fn finite_sample(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::FiniteSample);
    let mut csv = String::from("seed,gd_steps,gd_loss,adam_steps,adam_loss,gap,gap_se\n");
    let mut gaps = Vec::new();
    let mut all_matched = true;
    for s in 0..tol::GAP_SEEDS {
        let run_seed = derive_seed(seed, s);
        let gd_cfg = with_seed("fig1-gd", run_seed)?;
        let adam_cfg = with_seed("fig1-adam", run_seed)?;
        let DatasetConfig::Gaussian(spec) = gd_cfg.dataset else {
            unreachable!("Gaussian preset")
        };
        let target = gd_cfg.training.target_loss.expect("preset has a target");
        let mut nets = Vec::new();
        for cfg in [&gd_cfg, &adam_cfg] {
            let TrainedModel::TwoLayer { net, log, .. } = train_config(cfg)?.model else {
                unreachable!("two-layer preset")
            };
            all_matched &= log.final_loss <= target;
            nets.push((net, log));
        }
        let gap = accuracy_gap(&nets[1].0, &nets[0].0, &spec, tol::GAP_TEST_SAMPLES, derive_seed(run_seed, seeds::TEST))?;
        csv.push_str(&format!(
            "{s},{},{},{},{},{},{}\n",
            nets[0].1.steps_done, nets[0].1.final_loss, nets[1].1.steps_done, nets[1].1.final_loss, gap.value, gap.se
        ));
        gaps.push(gap);
    }
    let mean = gaps.iter().map(|g| g.value).sum::<f64>() / gaps.len() as f64;
    let se = (gaps.iter().map(|g| g.se * g.se).sum::<f64>()).sqrt() / gaps.len() as f64;
    rep.check(
        "both optimizers reach the common loss",
        all_matched,
        f64::from(u8::from(all_matched)),
        "true",
        format!("target {}", super::presets::FIG1_TARGET_LOSS),
    );
    rep.check(
        "mean paired gap Adam - GD",
        mean > 0.0,
        mean,
        "> 0",
        format!("se {se:.2e}; positive seeds {}/{}", gaps.iter().filter(|g| g.value > 0.0).count(), gaps.len()),
    );
    rep.tables.push(("finite_sample_gap.csv".into(), csv));
    Ok(rep)
}

/// Mean decoded correlations for each optimizer, evaluated at the first
/// snapshot whose training loss reaches the larger of the two runs' minima.
fn boolean(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Boolean);
    let mut csv = String::from("seed,optimizer,matched_loss,step,core,spurious\n");
    let mut sums = [[0.0; 2]; 2];
    let n_seeds = tol::BOOLEAN_SEEDS;
    for s in 0..n_seeds {
        let run_seed = derive_seed(seed, s);
        let cfgs = [with_seed("boolean-adam", run_seed)?, with_seed("boolean-sgd", run_seed)?];
        let cfg0 = &cfgs[0];
        let DatasetConfig::Boolean(task) = cfg0.dataset else {
            unreachable!("Boolean preset")
        };
        let ModelConfig::Mlp { hidden, activation, alpha } = &cfg0.model else {
            unreachable!("MLP preset")
        };
        let BatchMode::Minibatch { samples, size } = cfg0.training.batch else {
            unreachable!("minibatch preset")
        };
        let data = sample_dataset(&cfg0.dataset, samples, derive_seed(run_seed, seeds::DATA))?;
        let mut sizes = vec![task.dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let init = MlpNet::new(&sizes, *activation, *alpha, derive_seed(run_seed, seeds::INIT))?;
        let mut runs = Vec::new();
        for cfg in &cfgs {
            let mut net = init.clone();
            let settings = MlpTrainSettings {
                steps: cfg.training.steps,
                batch: Some(size),
                loss: cfg.training.loss,
                record_every: cfg.training.record_every,
                target_loss: None,
                keep_snapshots: true,
            };
            let log = train_mlp(&mut net, &data, &cfg.optimizer, &settings, derive_seed(run_seed, seeds::BATCH))?;
            runs.push((net, log));
        }
        let min_loss = |l: &crate::mlp::MlpTrainLog| l.losses.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let matched = min_loss(&runs[0].1).max(min_loss(&runs[1].1));
        for (j, (net, log)) in runs.iter_mut().enumerate() {
            let i = log.losses.iter().position(|x| x.1 <= matched).expect("the larger minimum is reached");
            net.params_mut().copy_from_slice(&log.snapshots[i]);
            let a = &cfgs[j].analysis;
            let core = decoded_correlation(net, &task, DecodeTarget::Core, a.decode_retrain, a.decode_eval, derive_seed(run_seed, seeds::DECODE_CORE))?;
            let spur = decoded_correlation(
                net,
                &task,
                DecodeTarget::Spurious,
                a.decode_retrain,
                a.decode_eval,
                derive_seed(run_seed, seeds::DECODE_SPURIOUS),
            )?;
            sums[j][0] += core.value / n_seeds as f64;
            sums[j][1] += spur.value / n_seeds as f64;
            csv.push_str(&format!(
                "{s},{},{matched},{},{},{}\n",
                cfgs[j].optimizer.algorithm,
                log.losses[i].0,
                core.value,
                spur.value
            ));
        }
    }
    let [adam, sgd] = sums;
    rep.check(
        "decoded core: Adam > SGD",
        adam[0] > sgd[0],
        adam[0] - sgd[0],
        "> 0",
        format!("Adam {:.3}, SGD {:.3}", adam[0], sgd[0]),
    );
    rep.check(
        "decoded spurious: Adam < SGD",
        adam[1] < sgd[1],
        adam[1] - sgd[1],
        "< 0",
        format!("Adam {:.3}, SGD {:.3}", adam[1], sgd[1]),
    );
    rep.tables.push(("boolean_decoded.csv".into(), csv));
    Ok(rep)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn invariants(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Invariants);
    let mut r = stream(seed);

    // positive homogeneity in W and in x
    let mut worst: f64 = 0.0;
    for t in 0..200u64 {
        let net = init_net(8, 3, 1.0, HeadMode::Random, derive_seed(seed, t))?;
        let x: Vec<f64> = (0..3).map(|_| r.sample(StandardNormal)).collect();
        let c = uniform(&mut r, 0.1, 10.0);
        let f = net.forward(&x);
        let mut scaled = net.clone();
        scaled.weights_mut().scale(c);
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        worst = worst.max(rel_err(scaled.forward(&x), c * f)).max(rel_err(net.forward(&cx), c * f));
    }
    rep.check("positive homogeneity", worst < 1e-12, worst, "< 1e-12", "200 random nets, f(cW;x) and f(W;cx)");

    // analytic gradients against central differences
    let spec = GaussianSpec::isotropic(0.3, 2.0, 0.2, 3)?;
    let data = sample_gaussian(&spec, 200, derive_seed(seed, 500))?;
    let net = init_net(6, 3, 1.0, HeadMode::Balanced, derive_seed(seed, 501))?;
    let h = 1e-6;
    let keep: Vec<usize> = (0..data.len())
        .filter(|&i| net.weights().iter_rows().all(|w| crate::matrix::dot(w, data.x(i)).abs() > 1e-3))
        .collect();
    let data = data.subset(&keep);
    let mut worst: f64 = 0.0;
    for loss in [LossKind::Logistic, LossKind::Correlation] {
        let g = net.grad(&data, loss)?;
        for idx in 0..g.as_slice().len() {
            let mut p = net.clone();
            p.weights_mut().as_mut_slice()[idx] += h;
            let mut m = net.clone();
            m.weights_mut().as_mut_slice()[idx] -= h;
            let fd = (p.loss(&data, loss) - m.loss(&data, loss)) / (2.0 * h);
            worst = worst.max(rel_err(g.as_slice()[idx], fd));
        }
    }
    rep.check(
        "two-layer gradient vs finite differences",
        worst < tol::FD_REL_TOL,
        worst,
        format!("< {:e} relative", tol::FD_REL_TOL),
        "logistic and correlation losses",
    );

    let task = BooleanTaskSpec::new(10, 3, 1, 0.8)?;
    let raw = crate::datasets::sample_boolean(&task, 60, derive_seed(seed, 502))?;
    let x: Vec<f64> = raw.inputs().iter().map(|v| v + 0.1 * r.sample::<f64, _>(StandardNormal)).collect();
    let data = crate::datasets::Dataset::new(10, x, raw.labels().to_vec(), None)?;
    let mlp = MlpNet::new(&[10, 7, 5, 1], Activation::LeakyRelu { slope: 0.01 }, 1.0, derive_seed(seed, 503))?;
    let mut g = vec![0.0; mlp.num_params()];
    mlp.grad_into(&data, None, LossKind::Logistic, &mut g)?;
    let mut worst: f64 = 0.0;
    for idx in 0..g.len() {
        let mut p = mlp.clone();
        p.params_mut()[idx] += h;
        let mut m = mlp.clone();
        m.params_mut()[idx] -= h;
        let fd = (p.loss(&data, LossKind::Logistic) - m.loss(&data, LossKind::Logistic)) / (2.0 * h);
        worst = worst.max(rel_err(g[idx], fd));
    }
    rep.check(
        "MLP gradient vs finite differences",
        worst < tol::FD_REL_TOL,
        worst,
        format!("< {:e} relative", tol::FD_REL_TOL),
        "logistic loss, jittered inputs",
    );

    // predicted tables are distributions over unit directions
    let mut bad = 0;
    let mut checked = 0;
    for i in 0..=20 {
        let omega = 1.5 + 2.5 * i as f64 / 20.0;
        for alg in [Algorithm::Gd, Algorithm::SignGd, Algorithm::Adam] {
            for s in [0.72, 0.85, 1.0] {
                checked += 1;
                bad += usize::from(predicted_toy_table(alg, omega, s).validate().is_err());
            }
        }
    }
    rep.check(
        "direction tables normalized",
        bad == 0,
        bad as f64,
        "0 failures",
        format!("{checked} (algorithm, omega, s) combinations"),
    );

    // two runs of one config give byte-identical artifacts
    let mut cfg = preset("toy-gd")?;
    cfg.name = "determinism".into();
    if let ModelConfig::TwoLayer { width, .. } = &mut cfg.model {
        *width = 200;
    }
    cfg.training.steps = 500;
    cfg.training.record_every = 50;
    cfg.analysis.metrics = vec![
        super::config::Metric::Trajectory,
        super::config::Metric::Directions,
        super::config::Metric::Boundary,
        super::config::Metric::Accuracy,
        super::config::Metric::Agreement,
    ];
    let root = std::env::temp_dir().join(format!("iblab-determinism-{}-{seed}", std::process::id()));
    let outcome = (|| -> Result<(bool, usize)> {
        let a = run(&cfg, &root.join("a"))?;
        let b = run(&cfg, &root.join("b"))?;
        let mut same = a == b;
        let mut compared = 0;
        for f in a.files.iter().filter(|f| f.as_str() != "timing.json") {
            let fa = std::fs::read(root.join("a").join(f)).map_err(|e| Error::io(root.join("a").join(f), e))?;
            let fb = std::fs::read(root.join("b").join(f)).map_err(|e| Error::io(root.join("b").join(f), e))?;
            same &= fa == fb;
            compared += 1;
        }
        Ok((same, compared))
    })();
    let _ = std::fs::remove_dir_all(&root);
    let (same, compared) = outcome?;
    rep.check(
        "run reports are deterministic",
        same,
        compared as f64,
        "identical bytes",
        format!("{compared} artifacts compared"),
    );
    Ok(rep)
}
