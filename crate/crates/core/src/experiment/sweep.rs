//! Cartesian-product sweeps over config fields.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use super::run::{run, RunReport};
use crate::datasets::write_file;
use crate::{Error, Result};

/// One sweep dimension. Every path in `paths` (dot-separated, e.g.
/// `optimizer.beta1`) is set to the same value, so tied parameters move
/// together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub paths: Vec<String>,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub template: ExperimentConfig,
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    /// `(axis label, value)` in axis order.
    pub assignment: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| Error::Config {
            path: path.to_string(),
            reason: format!("`{}` is not an object", parts[..i].join(".")),
        })?;
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), value);
            return Ok(());
        }
        cur = obj.get_mut(*p).ok_or_else(|| Error::Config {
            path: path.to_string(),
            reason: format!("no field `{p}`"),
        })?;
    }
    unreachable!("split yields at least one part")
}

fn short(v: &Value) -> String {
    match v {
        Value::Object(m) => m
            .get("algorithm")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| v.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: SweepSpec = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            reason: e.into_inner().to_string(),
        })?;
        spec.template.validate()?;
        Ok(spec)
    }

    /// All points of the product, last axis varying fastest. Each config is
    /// named `<template>-<index>` and validated.
    pub fn expand(&self) -> Result<Vec<SweepPoint>> {
        for (i, a) in self.axes.iter().enumerate() {
            if a.paths.is_empty() || a.values.is_empty() {
                return Err(Error::Config {
                    path: format!("axes[{i}]"),
                    reason: "needs at least one path and one value".into(),
                });
            }
        }
        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        let base = serde_json::to_value(&self.template)?;
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut v = base.clone();
            let mut rem = index;
            let mut assignment = vec![(String::new(), Value::Null); self.axes.len()];
            for (ai, axis) in self.axes.iter().enumerate().rev() {
                let value = &axis.values[rem % axis.values.len()];
                rem /= axis.values.len();
                for p in &axis.paths {
                    set_path(&mut v, p, value.clone())?;
                }
                assignment[ai] = (axis.paths.join("+"), value.clone());
            }
            set_path(&mut v, "name", Value::String(format!("{}-{index}", self.template.name)))?;
            let config: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Config {
                path: format!("sweep point {index}"),
                reason: e.to_string(),
            })?;
            config.validate()?;
            out.push(SweepPoint {
                index,
                assignment,
                config,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub point: SweepPoint,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub outcomes: Vec<SweepOutcome>,
    pub failures: usize,
}

impl SweepReport {
    /// One row per point with the headline metrics; failed points keep their
    /// row with the error message.
    pub fn to_csv(&self) -> String {
        let axes: Vec<String> = self
            .outcomes
            .first()
            .map(|o| o.point.assignment.iter().map(|(k, _)| k.clone()).collect())
            .unwrap_or_default();
        let mut out = String::from("index,name");
        for a in &axes {
            out.push(',');
            out.push_str(a);
        }
        out.push_str(",status,steps_done,final_loss,converged,test_accuracy,linear_agreement,s_empirical,decoded_core,decoded_spurious,verdicts_passed,error\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for o in &self.outcomes {
            out.push_str(&format!("{},{}", o.point.index, o.point.config.name));
            for (_, v) in &o.point.assignment {
                out.push(',');
                out.push_str(&short(v).replace(',', ";"));
            }
            match &o.report {
                Some(r) => {
                    let m = &r.metrics;
                    out.push_str(&format!(
                        ",ok,{},{},{},{},{},{},{},{},{},\n",
                        r.training.steps_done,
                        r.training.final_loss,
                        r.training.convergence.map(|c| c.converged.to_string()).unwrap_or_default(),
                        opt(m.test_accuracy.map(|e| e.value)),
                        opt(m.linear_agreement.map(|a| a.agreement)),
                        opt(m.directions.as_ref().and_then(|d| d.s_empirical)),
                        opt(m.decoded_core.map(|d| d.value)),
                        opt(m.decoded_spurious.map(|d| d.value)),
                        r.passed(),
                    ));
                }
                None => {
                    let msg = o.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
                    out.push_str(&format!(",failed,,,,,,,,,,{msg}\n"));
                }
            }
        }
        out
    }
}

/// Runs every point (on `jobs` threads) into `dir/<point name>/` and writes
/// `dir/sweep.csv`. A failing point is recorded and does not stop the others.
pub fn run_sweep(spec: &SweepSpec, dir: &Path, jobs: usize) -> Result<SweepReport> {
    let points = spec.expand()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config {
            path: "jobs".into(),
            reason: e.to_string(),
        })?;
    let outcomes: Vec<SweepOutcome> = pool.install(|| {
        points
            .into_par_iter()
            .map(|point| {
                let res = run(&point.config, &dir.join(&point.config.name));
                match res {
                    Ok(report) => SweepOutcome {
                        point,
                        report: Some(report),
                        error: None,
                    },
                    Err(e) => SweepOutcome {
                        point,
                        report: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    let failures = outcomes.iter().filter(|o| o.report.is_none()).count();
    let report = SweepReport { outcomes, failures };
    write_file(&dir.join("sweep.csv"), report.to_csv().as_bytes())?;
    Ok(report)
}
