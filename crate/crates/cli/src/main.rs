use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use iblab::experiment::{
    plot_run, preset, run, run_sweep, sample_dataset, sweep_preset, verify, DatasetConfig, ExperimentConfig, Suite,
    SweepSpec, PRESET_NAMES, SWEEP_NAMES,
};

#[derive(Parser)]
#[command(name = "iblab", version, about = "Implicit-bias experiments for GD, signGD and Adam")]
struct Cli {
    /// Output root (overrides IBLAB_OUT and the config's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a config's dataset and write them as CSV.
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// Number of samples (defaults to the config's training sample size, else 1000).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Train one config and write its report and artifacts.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a verification suite (or `all`).
    Verify { suite: String },
    /// Run a sweep from a sweep file or a named sweep preset.
    Sweep {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Redraw the boundary plots of a finished run directory.
    Plot { run_dir: PathBuf },
    /// Run a named preset, or print it with --print.
    Preset {
        name: Option<String>,
        #[arg(long)]
        print: bool,
        #[arg(long)]
        list: bool,
    },
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Verdict(String),
    Config(anyhow::Error),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let config = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<iblab::Error>(),
                Some(iblab::Error::Config { .. } | iblab::Error::InvalidParameter { .. } | iblab::Error::Json(_))
            )
        });
        if config {
            Failure::Config(e)
        } else {
            Failure::Other(e)
        }
    }
}

impl From<iblab::Error> for Failure {
    fn from(e: iblab::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn output_root(cli_out: Option<&Path>, cfg_out: Option<&str>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("IBLAB_OUT") {
        return PathBuf::from(p);
    }
    cfg_out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn train_and_report(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), Failure> {
    let dir = output_root(out, cfg.output_dir.as_deref()).join(&cfg.name);
    let report = run(cfg, &dir)?;
    let t = &report.training;
    println!("{}: {} steps, final loss {:.6}", report.name, t.steps_done, t.final_loss);
    if let Some(c) = t.convergence {
        println!("  convergence: max angle {:.3e} over steps {}..{}", c.max_angle, c.from_step, c.to_step);
    }
    let m = &report.metrics;
    if let Some(a) = m.test_accuracy {
        println!("  test accuracy {:.5} (se {:.1e})", a.value, a.se);
    }
    if let Some(a) = m.linear_agreement {
        println!("  linear agreement {:.5}", a.agreement);
    }
    if let (Some(c), Some(s)) = (m.decoded_core, m.decoded_spurious) {
        println!("  decoded core {:.3}, spurious {:.3}", c.value, s.value);
    }
    for v in &report.verdicts {
        println!("  {} {}: {} (need {}) {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.value, v.threshold, v.detail);
    }
    println!("  wrote {} files to {}", report.files.len(), dir.display());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("{}: verdict failed", report.name)))
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Sample { config, n } => {
            let cfg = load_config(&config, cli.seed)?;
            let n = n.or(cfg.training.batch.train_samples()).unwrap_or(1000);
            let data = sample_dataset(&cfg.dataset, n, iblab::rng::derive_seed(cfg.seed, 0))?;
            let path = output_root(out, cfg.output_dir.as_deref()).join(&cfg.name).join("samples.csv");
            match cfg.dataset {
                DatasetConfig::Boolean(_) => data.write_boolean_csv(&path)?,
                _ => data.write_csv(&path)?,
            }
            println!("wrote {n} samples to {}", path.display());
            Ok(())
        }
        Command::Train { config } => {
            let cfg = load_config(&config, cli.seed)?;
            train_and_report(&cfg, out)
        }
        Command::Verify { suite } => {
            let suites = if suite == "all" { Suite::ALL.to_vec() } else { vec![Suite::parse(&suite)?] };
            let seed = cli.seed.unwrap_or(0);
            let mut failed = Vec::new();
            for s in suites {
                let rep = verify(s, seed)?;
                rep.write(&output_root(out, None).join(format!("verify-{}", s.name())))?;
                print!("{}", rep.table());
                if !rep.passed() {
                    failed.push(s.name());
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verdict(format!("failed suites: {}", failed.join(", "))))
            }
        }
        Command::Sweep { config, preset, jobs } => {
            let mut spec = match (config, preset) {
                (Some(p), None) => {
                    let text = std::fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))
                        .map_err(Failure::Config)?;
                    SweepSpec::from_json(&text)?
                }
                (None, Some(name)) => sweep_preset(&name)?,
                _ => {
                    return Err(Failure::Config(anyhow::anyhow!(
                        "sweep needs --config or --preset (one of: {})",
                        SWEEP_NAMES.join(", ")
                    )))
                }
            };
            if let Some(s) = cli.seed {
                spec.template.seed = s;
            }
            let dir = output_root(out, spec.template.output_dir.as_deref()).join(format!("sweep-{}", spec.template.name));
            let report = run_sweep(&spec, &dir, jobs)?;
            println!(
                "{} points, {} failed; table at {}",
                report.outcomes.len(),
                report.failures,
                dir.join("sweep.csv").display()
            );
            for o in report.outcomes.iter().filter(|o| o.error.is_some()) {
                eprintln!("  {}: {}", o.point.config.name, o.error.as_deref().unwrap_or_default());
            }
            if report.failures == 0 {
                Ok(())
            } else {
                Err(Failure::Verdict(format!("{} sweep points failed", report.failures)))
            }
        }
        Command::Plot { run_dir } => {
            let files = plot_run(&run_dir)?;
            println!("wrote {} to {}", files.join(", "), run_dir.display());
            Ok(())
        }
        Command::Preset { name, print, list } => {
            if list || name.is_none() {
                println!("presets: {}", PRESET_NAMES.join(", "));
                println!("sweeps:  {}", SWEEP_NAMES.join(", "));
                return Ok(());
            }
            let mut cfg = preset(name.as_deref().expect("checked above"))?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if print {
                println!("{}", cfg.to_json());
                return Ok(());
            }
            train_and_report(&cfg, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
