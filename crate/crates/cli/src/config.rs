//! Run configuration, read from TOML (`.cfg`) files or assembled from flags.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use pbmor::bench::{BenchmarkId, MsdParams, RandomParams, RodParams};
use pbmor::mor::{Chain, InterpolationSpec, Realify, Sidedness, DEFAULT_RANK_TOL};
use pbmor::sim::Signal;
use pbmor::verify::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    BenchGen,
    Reduce,
    Verify,
    SweepFreq,
    SweepTime,
    Simulate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::BenchGen => "bench-gen",
            Stage::Reduce => "reduce",
            Stage::Verify => "verify",
            Stage::SweepFreq => "sweep-freq",
            Stage::SweepTime => "sweep-time",
            Stage::Simulate => "simulate",
        }
    }
}

/// Where the full-order system comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rod: Option<RodParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msd: Option<MsdParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomParams>,
    /// Manifest file or directory, instead of a benchmark.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

/// A frequency shift, written as a number or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Real(f64),
    Complex([f64; 2]),
}

impl Point {
    pub fn value(self) -> Complex64 {
        match self {
            Point::Real(x) => Complex64::new(x, 0.0),
            Point::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    /// Each point becomes a repeated-point chain of length `depth`.
    #[serde(default)]
    pub points: Vec<Point>,
    #[serde(default = "one")]
    pub depth: usize,
    /// Derivative order per chain entry.
    #[serde(default)]
    pub order: usize,
    pub mu_points: Vec<Vec<f64>>,
    pub sidedness: Sidedness,
    #[serde(default)]
    pub realify: Realify,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    /// Explicit chains, used instead of `points` for their side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_chains: Option<Vec<Chain>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_chains: Option<Vec<Chain>>,
}

fn one() -> usize {
    1
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

impl ReductionConfig {
    pub fn to_spec(&self) -> InterpolationSpec {
        let points: Vec<Complex64> = self.points.iter().map(|p| p.value()).collect();
        let mut spec = InterpolationSpec::from_points(&points, self.depth, self.order, self.mu_points.clone(), self.sidedness);
        if let Some(v) = &self.v_chains {
            spec.v_chains = v.clone();
        }
        if let Some(w) = &self.w_chains {
            spec.w_chains = w.clone();
        }
        spec.realify = self.realify;
        spec.rank_tol = self.rank_tol;
        spec
    }
}

/// A parameter axis `[min, max, count]`, sampled linearly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis(pub f64, pub f64, pub usize);

impl Axis {
    pub fn values(self) -> Vec<f64> {
        pbmor::verify::linspace(self.0, self.1, self.2)
    }
}

pub fn mu_grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    let values: Vec<Vec<f64>> = axes.iter().map(|a| a.values()).collect();
    pbmor::verify::param_grid(&values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFreqConfig {
    #[serde(default = "omega_min")]
    pub omega_min: f64,
    #[serde(default = "omega_max")]
    pub omega_max: f64,
    #[serde(default = "hundred")]
    pub points: usize,
    #[serde(default = "one")]
    pub level: usize,
    pub mu_axes: Vec<Axis>,
    /// Fails the run when the largest relative error exceeds this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rel_err: Option<f64>,
}

fn omega_min() -> f64 {
    1e-4
}

fn omega_max() -> f64 {
    1e4
}

fn hundred() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTimeConfig {
    pub inputs: Vec<Signal>,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub mu_axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rel_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub mu: Vec<f64>,
    pub inputs: Vec<Signal>,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    /// Also simulate the reduced model when one is available.
    #[serde(default = "yes")]
    pub reduced: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub stages: Vec<Stage>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub system: SystemSource,
    /// A reduced manifest from an earlier run; otherwise the model is built
    /// from `[reduction]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionConfig>,
    #[serde(default)]
    pub verify: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_freq: Option<SweepFreqConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_time: Option<SweepTimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn new(stages: Vec<Stage>, output_dir: PathBuf) -> Self {
        RunConfig {
            stages,
            output_dir,
            seed: 0,
            system: SystemSource::default(),
            reduced: None,
            reduction: None,
            verify: Tolerances::default(),
            sweep_freq: None,
            sweep_time: None,
            simulate: None,
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), msg: e.to_string() })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Loads a `.cfg` file, or the config embedded in a `run.json` log.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse { path: origin.clone(), msg: e.to_string() })?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct Log {
                config: RunConfig,
            }
            let log: Log =
                serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: origin, msg: e.to_string() })?;
            return Ok(log.config);
        }
        Self::from_toml(&text, &origin)
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    /// Checks that every stage has what it needs and that referenced files
    /// exist, before anything runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.stages.is_empty() {
            return bad("no stages to run".into());
        }
        let sys = &self.system;
        match (sys.benchmark, &sys.manifest) {
            (Some(_), Some(_)) => return bad("[system] names both a benchmark and a manifest".into()),
            (None, None) => return bad("[system] needs a benchmark or a manifest".into()),
            (Some(_), None) if sys.n.is_none() => return bad("[system] benchmark needs n".into()),
            (None, Some(m)) if !m.exists() => return bad(format!("system manifest {} does not exist", m.display())),
            _ => {}
        }
        if self.has(Stage::BenchGen) && sys.benchmark.is_none() {
            return bad("bench-gen needs a benchmark in [system]".into());
        }
        if let Some(r) = &self.reduced {
            if !r.exists() {
                return bad(format!("reduced manifest {} does not exist", r.display()));
            }
        }
        let needs_reduced = [Stage::Reduce, Stage::Verify, Stage::SweepFreq, Stage::SweepTime].iter().any(|s| self.has(*s));
        if needs_reduced && self.reduced.is_none() && self.reduction.is_none() {
            return bad("a reduced model is needed: give [reduction] or a reduced manifest".into());
        }
        if self.has(Stage::Reduce) && self.reduction.is_none() {
            return bad("reduce needs a [reduction] section".into());
        }
        if let Some(r) = &self.reduction {
            if r.depth == 0 {
                return bad("[reduction] depth must be at least 1".into());
            }
            if r.points.is_empty() && r.v_chains.is_none() && r.w_chains.is_none() {
                return bad("[reduction] needs points or explicit chains".into());
            }
        }
        if self.has(Stage::SweepFreq) {
            match &self.sweep_freq {
                None => return bad("sweep-freq needs a [sweep_freq] section".into()),
                Some(f) if !(f.omega_min > 0.0 && f.omega_max >= f.omega_min) || f.points == 0 => {
                    return bad("[sweep_freq] needs 0 < omega_min <= omega_max and points > 0".into())
                }
                _ => {}
            }
        }
        if self.has(Stage::SweepTime) && self.sweep_time.is_none() {
            return bad("sweep-time needs a [sweep_time] section".into());
        }
        if self.has(Stage::Simulate) && self.simulate.is_none() {
            return bad("simulate needs a [simulate] section".into());
        }
        Ok(())
    }
}
