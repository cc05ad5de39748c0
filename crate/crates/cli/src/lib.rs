//! Command-line front end: turns subcommands and `.cfg` files into
//! [`RunConfig`]s and runs them.

pub mod config;
pub mod runner;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use pbmor::bench::BenchmarkId;
use pbmor::sim::Signal;

pub use config::{RunConfig, Stage};
pub use runner::{run, RunOutcome};

pub const THREADS_ENV: &str = "PMOR_THREADS";

#[derive(Parser, Debug)]
#[command(name = "pbmor", version, about = "Structure-preserving model reduction for parametric bilinear systems")]
pub struct Cli {
    /// Worker threads for parallel sweeps and checks [env: PMOR_THREADS]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration (.cfg) or a run.json log to take settings from
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Run directory; overrides `output_dir` from the config
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Replace the run directory if it exists
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Models {
    /// Full-order system manifest
    #[arg(long)]
    pub full: Option<PathBuf>,
    /// Reduced system manifest (with its provenance.json alongside)
    #[arg(long)]
    pub reduced: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every stage listed in a config file
    Run {
        config: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Write a benchmark system as a manifest plus Matrix Market files
    BenchGen {
        #[arg(long, value_parser = parse_benchmark)]
        id: Option<BenchmarkId>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Reduce a system and write the reduced manifest and provenance report
    Reduce {
        /// Full-order system manifest instead of the config's benchmark
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check every interpolation condition of a reduced model
    Verify {
        #[command(flatten)]
        models: Models,
        #[arg(long)]
        lagrange_tol: Option<f64>,
        #[arg(long)]
        derivative_tol: Option<f64>,
        #[arg(long)]
        gradient_tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Relative transfer-function error on a frequency and parameter grid
    SweepFreq {
        #[command(flatten)]
        models: Models,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        omega_min: Option<f64>,
        #[arg(long)]
        omega_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Parameter axis as min:max:count, once per parameter
        #[arg(long = "mu-axis", value_parser = parse_axis)]
        mu_axes: Vec<config::Axis>,
        #[command(flatten)]
        common: Common,
    },
    /// Relative output error of full and reduced simulations over a parameter grid
    SweepTime {
        #[command(flatten)]
        models: Models,
        /// Input signal, once per input, e.g. "0.05*(cos(10*t) + cos(5*t))"
        #[arg(long = "input", value_parser = parse_signal, allow_hyphen_values = true)]
        inputs: Vec<Signal>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long = "mu-axis", value_parser = parse_axis)]
        mu_axes: Vec<config::Axis>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate a system (and its reduced model, when given) and write CSV trajectories
    Simulate {
        #[command(flatten)]
        models: Models,
        #[arg(long = "input", value_parser = parse_signal, allow_hyphen_values = true)]
        inputs: Vec<Signal>,
        /// Parameter values, comma separated
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        mu: Option<Vec<f64>>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_benchmark(s: &str) -> Result<BenchmarkId, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown benchmark '{s}' (heated-rod-delay, msd-chain, random)"))
}

fn parse_axis(s: &str) -> Result<config::Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let err = || format!("expected min:max:count, got '{s}'");
    if parts.len() != 3 {
        return Err(err());
    }
    Ok(config::Axis(
        parts[0].parse().map_err(|_| err())?,
        parts[1].parse().map_err(|_| err())?,
        parts[2].parse().map_err(|_| err())?,
    ))
}

fn parse_signal(s: &str) -> Result<Signal, String> {
    Signal::parse(s).map_err(|e| e.to_string())
}

fn base(common: &Common, stage: Stage) -> Result<(RunConfig, bool)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(vec![], PathBuf::new()),
    };
    cfg.stages = vec![stage];
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if cfg.output_dir.as_os_str().is_empty() {
        bail!("no run directory: pass --out or set output_dir in the config");
    }
    Ok((cfg, common.force))
}

fn apply_models(cfg: &mut RunConfig, models: &Models) {
    if let Some(full) = &models.full {
        cfg.system = config::SystemSource { manifest: Some(full.clone()), ..Default::default() };
    }
    if let Some(red) = &models.reduced {
        cfg.reduced = Some(red.clone());
    }
}

/// Resolves a command line into a config and the `--force` flag.
pub fn resolve(cmd: Command) -> Result<(RunConfig, bool)> {
    Ok(match cmd {
        Command::Run { config, out, force } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            (cfg, force)
        }
        Command::BenchGen { id, n, seed, common } => {
            let (mut cfg, force) = base(&common, Stage::BenchGen)?;
            if id.is_some() {
                cfg.system = config::SystemSource { benchmark: id, ..Default::default() };
            }
            if n.is_some() {
                cfg.system.n = n;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            (cfg, force)
        }
        Command::Reduce { manifest, common } => {
            let (mut cfg, force) = base(&common, Stage::Reduce)?;
            if let Some(m) = manifest {
                cfg.system = config::SystemSource { manifest: Some(m), ..Default::default() };
            }
            cfg.reduced = None;
            (cfg, force)
        }
        Command::Verify { models, lagrange_tol, derivative_tol, gradient_tol, common } => {
            let (mut cfg, force) = base(&common, Stage::Verify)?;
            apply_models(&mut cfg, &models);
            if let Some(t) = lagrange_tol {
                cfg.verify.lagrange = t;
            }
            if let Some(t) = derivative_tol {
                cfg.verify.derivative = t;
            }
            if let Some(t) = gradient_tol {
                cfg.verify.gradient = t;
            }
            (cfg, force)
        }
        Command::SweepFreq { models, level, omega_min, omega_max, points, mu_axes, common } => {
            let (mut cfg, force) = base(&common, Stage::SweepFreq)?;
            apply_models(&mut cfg, &models);
            let sf = cfg.sweep_freq.get_or_insert_with(|| config::SweepFreqConfig {
                omega_min: 1e-4,
                omega_max: 1e4,
                points: 100,
                level: 1,
                mu_axes: Vec::new(),
                max_rel_err: None,
            });
            if let Some(v) = level {
                sf.level = v;
            }
            if let Some(v) = omega_min {
                sf.omega_min = v;
            }
            if let Some(v) = omega_max {
                sf.omega_max = v;
            }
            if let Some(v) = points {
                sf.points = v;
            }
            if !mu_axes.is_empty() {
                sf.mu_axes = mu_axes;
            }
            (cfg, force)
        }
        Command::SweepTime { models, inputs, t_end, step, mu_axes, common } => {
            let (mut cfg, force) = base(&common, Stage::SweepTime)?;
            apply_models(&mut cfg, &models);
            match &mut cfg.sweep_time {
                Some(st) => {
                    if !inputs.is_empty() {
                        st.inputs = inputs;
                    }
                    if let Some(v) = t_end {
                        st.t_end = v;
                    }
                    if let Some(v) = step {
                        st.step = v;
                    }
                    if !mu_axes.is_empty() {
                        st.mu_axes = mu_axes;
                    }
                }
                None => {
                    let (Some(t_end), Some(step)) = (t_end, step) else {
                        bail!("sweep-time needs --t-end and --step (or a config with [sweep_time])");
                    };
                    cfg.sweep_time =
                        Some(config::SweepTimeConfig { inputs, t_start: 0.0, t_end, step, mu_axes, max_rel_err: None });
                }
            }
            (cfg, force)
        }
        Command::Simulate { models, inputs, mu, t_end, step, common } => {
            let (mut cfg, force) = base(&common, Stage::Simulate)?;
            apply_models(&mut cfg, &models);
            match &mut cfg.simulate {
                Some(sc) => {
                    if !inputs.is_empty() {
                        sc.inputs = inputs;
                    }
                    if let Some(v) = mu {
                        sc.mu = v;
                    }
                    if let Some(v) = t_end {
                        sc.t_end = v;
                    }
                    if let Some(v) = step {
                        sc.step = v;
                    }
                }
                None => {
                    let (Some(t_end), Some(step)) = (t_end, step) else {
                        bail!("simulate needs --t-end and --step (or a config with [simulate])");
                    };
                    cfg.simulate = Some(config::SimulateConfig {
                        mu: mu.unwrap_or_default(),
                        inputs,
                        t_start: 0.0,
                        t_end,
                        step,
                        reduced: true,
                    });
                }
            }
            (cfg, force)
        }
    })
}

/// Thread count from the flag, then the environment; `None` leaves the
/// pool at its default size.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) => Ok(Some(n)),
            Err(_) => bail!("{THREADS_ENV} must be a positive integer, got '{v}'"),
        },
        _ => Ok(None),
    }
}
