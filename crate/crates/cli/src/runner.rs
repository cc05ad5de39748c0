//! Executes a [`RunConfig`] into a run directory.
//!
//! Everything is written to a hidden sibling directory first and renamed
//! into place at the end, so a run directory either holds a complete run or
//! does not exist. `index.json` lists every file with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pbmor::bench::BenchmarkConfig;
use pbmor::manifest::{read_system, write_system};
use pbmor::matfun::StructuredSystem;
use pbmor::mor::{build_spec, enumerate_conditions, InterpolationSpec, ReducedSystem, ReductionInfo};
use pbmor::sim::{simulate, SimProblem};
use pbmor::verify::{error_sweep_freq, error_sweep_time, logspace, verify_all};

use crate::config::{mu_grid, RunConfig, Stage};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const PROVENANCE_FILE: &str = "provenance.json";

/// What a finished run reports back.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    /// Every requested check passed.
    pub passed: bool,
    pub stages: Vec<(Stage, Value)>,
}

/// Provenance report stored next to a reduced manifest.
#[derive(Serialize, serde::Deserialize)]
pub struct Provenance {
    pub version: String,
    pub full_order: usize,
    pub reduced_order: usize,
    pub spec: InterpolationSpec,
    pub info: Option<ReductionInfo>,
    pub conditions: Vec<pbmor::mor::Condition>,
}

struct Reduced {
    sys: StructuredSystem,
    spec: Option<InterpolationSpec>,
    built: Option<ReducedSystem>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    tmp: PathBuf,
    full: Option<StructuredSystem>,
    reduced: Option<Reduced>,
}

impl Ctx<'_> {
    fn full(&mut self) -> Result<&StructuredSystem> {
        if self.full.is_none() {
            let src = &self.cfg.system;
            let sys = if let Some(id) = src.benchmark {
                let mut b = BenchmarkConfig::new(id, src.n.expect("validated"));
                b.seed = self.cfg.seed;
                b.rod = src.rod.clone().unwrap_or_default();
                b.msd = src.msd.clone().unwrap_or_default();
                b.random = src.random.clone().unwrap_or_default();
                b.generate().context("generating benchmark")?
            } else {
                let path = src.manifest.as_ref().expect("validated");
                read_system(path).with_context(|| format!("reading {}", path.display()))?.sys
            };
            self.full = Some(sys);
        }
        Ok(self.full.as_ref().unwrap())
    }

    fn reduced(&mut self) -> Result<&Reduced> {
        if self.reduced.is_none() {
            let red = if let Some(path) = self.cfg.reduced.clone() {
                let loaded = read_system(&path).with_context(|| format!("reading {}", path.display()))?;
                let dir = if path.is_dir() { path.clone() } else { path.parent().map(Path::to_path_buf).unwrap_or_default() };
                let prov = dir.join(PROVENANCE_FILE);
                let spec = if prov.exists() {
                    let text = fs::read_to_string(&prov)?;
                    let p: Provenance = serde_json::from_str(&text).with_context(|| format!("reading {}", prov.display()))?;
                    Some(p.spec)
                } else {
                    self.cfg.reduction.as_ref().map(|r| r.to_spec())
                };
                Reduced { sys: loaded.sys, spec, built: None }
            } else {
                let spec = self.cfg.reduction.as_ref().expect("validated").to_spec();
                let full = self.full()?;
                let built = build_spec(full, &spec).context("building reduced model")?;
                Reduced { sys: built.sys.clone(), spec: Some(spec), built: Some(built) }
            };
            self.reduced = Some(red);
        }
        Ok(self.reduced.as_ref().unwrap())
    }

    fn both(&mut self) -> Result<(&StructuredSystem, &Reduced)> {
        self.full()?;
        self.reduced()?;
        Ok((self.full.as_ref().unwrap(), self.reduced.as_ref().unwrap()))
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.tmp.join(name), text).with_context(|| format!("writing {name}"))
    }
}

/// Runs every stage of `cfg`. With `force`, an existing output directory is
/// replaced; otherwise it is an error.
pub fn run(cfg: &RunConfig, force: bool) -> Result<RunOutcome> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    if out.exists() && !force {
        bail!("output directory {} already exists (use --force to replace it)", out.display());
    }
    let name = out.file_name().ok_or_else(|| anyhow!("output directory has no name"))?.to_string_lossy().into_owned();
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    let result = run_into(cfg, &tmp);
    let (passed, stages) = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
    };
    if out.exists() {
        fs::remove_dir_all(&out).with_context(|| format!("removing {}", out.display()))?;
    }
    fs::rename(&tmp, &out).with_context(|| format!("moving run into {}", out.display()))?;
    Ok(RunOutcome { dir: out, passed, stages })
}

fn run_into(cfg: &RunConfig, tmp: &Path) -> Result<(bool, Vec<(Stage, Value)>)> {
    let mut ctx = Ctx { cfg, tmp: tmp.to_path_buf(), full: None, reduced: None };
    let mut stages = cfg.stages.clone();
    stages.sort();
    stages.dedup();
    let mut results = Vec::new();
    let mut passed = true;
    for stage in stages {
        let started = Instant::now();
        let (ok, summary) = run_stage(&mut ctx, stage).with_context(|| format!("stage {}", stage.name()))?;
        eprintln!(
            "{:<10} {:>8.2}s  {}",
            stage.name(),
            started.elapsed().as_secs_f64(),
            if ok { "ok" } else { "FAILED" }
        );
        passed &= ok;
        results.push((stage, summary));
    }
    let log = json!({
        "tool": "pbmor",
        "version": VERSION,
        "config": cfg,
        "passed": passed,
        "stages": results.iter().map(|(s, v)| json!({"stage": s, "result": v})).collect::<Vec<_>>(),
    });
    ctx.write("run.json", &(serde_json::to_string_pretty(&log)? + "\n"))?;
    write_index(tmp)?;
    Ok((passed, results))
}

fn run_stage(ctx: &mut Ctx, stage: Stage) -> Result<(bool, Value)> {
    match stage {
        Stage::BenchGen => {
            let dir = ctx.tmp.join("full");
            fs::create_dir(&dir)?;
            let full = ctx.full()?;
            write_system(&dir, full, None)?;
            Ok((true, json!({"manifest": "full/system.toml", "n": full.n, "m": full.m, "p": full.p, "d": full.d})))
        }
        Stage::Reduce => {
            let dir = ctx.tmp.join("reduced");
            fs::create_dir(&dir)?;
            let n = ctx.full()?.n;
            let red = ctx.reduced()?;
            let built = red.built.as_ref().ok_or_else(|| anyhow!("reduce needs [reduction], not a precomputed model"))?;
            let spec = red.spec.clone().expect("built from a spec");
            write_system(&dir, &built.sys, Some((&built.v, &built.w)))?;
            let prov = Provenance {
                version: VERSION.into(),
                full_order: n,
                reduced_order: built.order(),
                conditions: enumerate_conditions(&spec, built.sys.d),
                spec,
                info: built.info.clone(),
            };
            fs::write(dir.join(PROVENANCE_FILE), serde_json::to_string_pretty(&prov)? + "\n")?;
            Ok((
                true,
                json!({
                    "manifest": "reduced/system.toml",
                    "order": built.order(),
                    "conditions": prov.conditions.len(),
                    "info": built.info,
                }),
            ))
        }
        Stage::Verify => {
            let tol = ctx.cfg.verify;
            let (full, red) = ctx.both()?;
            let spec = red.spec.as_ref().ok_or_else(|| anyhow!("no interpolation spec for the reduced model"))?;
            let report = verify_all(full, &red.sys, spec, tol);
            ctx.write("verification.json", &(report.to_json() + "\n"))?;
            Ok((report.passed(), serde_json::to_value(&report.summary)?))
        }
        Stage::SweepFreq => {
            let sc = ctx.cfg.sweep_freq.clone().expect("validated");
            let omegas = logspace(sc.omega_min, sc.omega_max, sc.points);
            let grid = mu_grid(&sc.mu_axes);
            let (full, red) = ctx.both()?;
            let sweep = error_sweep_freq(full, &red.sys, &omegas, &grid, sc.level)?;
            ctx.write("sweep_freq.csv", &sweep.to_csv())?;
            let ok = sc.max_rel_err.is_none_or(|m| sweep.max_rel_err <= m);
            Ok((
                ok,
                json!({
                    "csv": "sweep_freq.csv",
                    "level": sc.level,
                    "nodes": sweep.rows.len(),
                    "max_rel_err": sweep.max_rel_err,
                    "max_abs_err": sweep.max_abs_err,
                    "flagged": sweep.flagged,
                    "threshold": sc.max_rel_err,
                }),
            ))
        }
        Stage::SweepTime => {
            let sc = ctx.cfg.sweep_time.clone().expect("validated");
            let grid = mu_grid(&sc.mu_axes);
            let mut template = SimProblem::new(Vec::new(), sc.inputs.clone(), sc.t_end, sc.step);
            template.t_start = sc.t_start;
            let (full, red) = ctx.both()?;
            let sweep = error_sweep_time(full, &red.sys, &template, &grid)?;
            ctx.write("sweep_time.csv", &sweep.to_csv())?;
            let ok = sweep.all_succeeded() && sc.max_rel_err.is_none_or(|m| sweep.max_rel_err <= m);
            Ok((
                ok,
                json!({
                    "csv": "sweep_time.csv",
                    "max_rel_err": sweep.max_rel_err,
                    "cases": sweep.cases,
                    "threshold": sc.max_rel_err,
                }),
            ))
        }
        Stage::Simulate => {
            let sc = ctx.cfg.simulate.clone().expect("validated");
            let mut prob = SimProblem::new(sc.mu.clone(), sc.inputs.clone(), sc.t_end, sc.step);
            prob.t_start = sc.t_start;
            let traj = simulate(ctx.full()?, &prob).context("simulating the full model")?;
            ctx.write("trajectory_full.csv", &traj.to_csv())?;
            let mut files = vec!["trajectory_full.csv"];
            let has_reduced = ctx.cfg.reduced.is_some() || ctx.cfg.reduction.is_some();
            if sc.reduced && has_reduced {
                let traj = simulate(&ctx.reduced()?.sys, &prob).context("simulating the reduced model")?;
                ctx.write("trajectory_reduced.csv", &traj.to_csv())?;
                files.push("trajectory_reduced.csv");
            }
            Ok((true, json!({"csv": files, "samples": traj.t.len()})))
        }
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("under root");
            out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
        }
    }
    Ok(())
}

/// Writes `index.json` with the size and SHA-256 of every file in `dir`.
pub fn write_index(dir: &Path) -> Result<()> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.retain(|f| f != "index.json");
    files.sort();
    let entries: Vec<Value> = files
        .iter()
        .map(|f| -> Result<Value> {
            let bytes = fs::read(dir.join(f))?;
            Ok(json!({"path": f, "bytes": bytes.len(), "sha256": format!("{:x}", Sha256::digest(&bytes))}))
        })
        .collect::<Result<_>>()?;
    let index = json!({"files": entries});
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(())
}
