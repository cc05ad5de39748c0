//! Numerical checks of interpolation conditions and error sweeps between a
//! full and a reduced model.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMat};
use crate::matfun::{binom, StructuredSystem};
use crate::mor::{enumerate_conditions, Condition, ConditionKind, InterpolationSpec};
use crate::sim::{relative_output_error, simulate, SimProblem};
use crate::tf::{eval_gk, eval_gk_freq_deriv, eval_gk_param_grad, TransferEvalRequest, MAX_ANALYTIC_ORDER};

pub const LAGRANGE_TOL: f64 = 1e-8;
pub const DERIVATIVE_TOL: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-7;
/// Agreement required between analytic values and the difference oracle.
pub const ORACLE_TOL: f64 = 1e-6;
/// Highest total derivative order cross-checked by differences; beyond it
/// cancellation in the stencils dominates.
pub const ORACLE_MAX_ORDER: usize = 2;
/// Condition values below this fraction of the largest value of the same
/// tuple, and sweep values below this fraction of the grid maximum, are
/// measured against that scale instead of themselves.
pub const RELATIVE_FLOOR: f64 = 1e-12;
const TINY: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    FiniteDifference,
}

/// Outcome for one condition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub id: String,
    pub kind: ConditionKind,
    pub points: Vec<Complex64>,
    pub orders: Vec<usize>,
    pub mu: Vec<f64>,
    pub mu_index: Option<usize>,
    pub method: Method,
    pub full_norm: f64,
    pub reduced_norm: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    /// The full value was below the relative floor, so `rel_dev` is the
    /// deviation relative to the largest value of the same tuple over all
    /// parameter points.
    pub floored: bool,
    /// Largest disagreement between the analytic value and the difference
    /// oracle over both models, when cross-checked.
    pub oracle_dev: Option<f64>,
    /// False when the reduction does not imply this identity.
    pub guaranteed: bool,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub not_guaranteed: usize,
    pub errors: usize,
    pub max_rel_dev: f64,
    pub max_abs_dev: f64,
    pub max_oracle_dev: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<ConditionRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    fn from_records(records: Vec<ConditionRecord>) -> Self {
        let mut s = Summary { total: records.len(), ..Summary::default() };
        for r in &records {
            if r.error.is_some() {
                s.errors += 1;
            }
            if !r.guaranteed {
                s.not_guaranteed += 1;
                continue;
            }
            if r.pass {
                s.passed += 1;
            } else {
                s.failed += 1;
            }
            if r.rel_dev.is_finite() {
                s.max_rel_dev = s.max_rel_dev.max(r.rel_dev);
                s.max_abs_dev = s.max_abs_dev.max(r.abs_dev);
            }
            if let Some(o) = r.oracle_dev {
                s.max_oracle_dev = Some(s.max_oracle_dev.unwrap_or(0.0).max(o));
            }
        }
        VerificationReport { records, summary: s }
    }

    /// Every guaranteed condition passed.
    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn merge(mut self, other: VerificationReport) -> Self {
        self.records.extend(other.records);
        Self::from_records(self.records)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn norm(m: &CMat) -> f64 {
    spectral_norm(m)
}

/// Central difference of order `j` with offsets `(j/2 - i) h`.
fn stencil(j: usize) -> Vec<(f64, f64)> {
    (0..=j)
        .map(|i| {
            let w = if i % 2 == 0 { 1.0 } else { -1.0 } * binom(j, i);
            (j as f64 / 2.0 - i as f64, w)
        })
        .collect()
}

/// Ridders' extrapolation of a central-difference family `d(h)` whose error
/// expands in even powers of `h`. Starts at `h0`, shrinks the step by 1.4
/// per row of a Neville tableau and keeps the entry with the smallest error
/// estimate, so the step adapts to both truncation and cancellation.
fn ridders(d: impl Fn(f64) -> Result<CMat>, h0: f64) -> Result<CMat> {
    const CON: f64 = 1.4;
    const ROWS: usize = 24;
    let c2 = CON * CON;
    let mut prev: Vec<CMat> = Vec::new();
    let mut best: Option<(f64, CMat)> = None;
    let mut h = h0;
    for i in 0..ROWS {
        if i > 0 {
            h /= CON;
        }
        let mut row = vec![d(h)?];
        let mut fac = c2;
        for j in 1..=i {
            let v = (&row[j - 1] * Complex64::new(fac, 0.0) - &prev[j - 1]) / Complex64::new(fac - 1.0, 0.0);
            fac *= c2;
            let err = norm_fro(&(&v - &row[j - 1])).max(norm_fro(&(&v - &prev[j - 1])));
            if best.as_ref().is_none_or(|(e, _)| err <= *e) {
                best = Some((err, v.clone()));
            }
            row.push(v);
        }
        if i > 0 {
            let drift = norm_fro(&(&row[i] - &prev[i - 1]));
            if best.as_ref().is_some_and(|(e, _)| drift >= 2.0 * e) {
                break;
            }
        }
        prev = row;
    }
    Ok(best.expect("at least two rows").1)
}

fn norm_fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn initial_step(at: f64) -> f64 {
    0.1 * (1.0 + at)
}

/// Mixed frequency partial of `G_k` by tensor-product central differences
/// along the real axis of each argument, extrapolated in the step.
pub fn fd_freq_deriv(sys: &StructuredSystem, points: &[Complex64], orders: &[usize], mu: &[f64]) -> Result<CMat> {
    if orders.iter().all(|&j| j == 0) {
        return eval_gk(sys, &TransferEvalRequest::new(points.to_vec(), mu.to_vec()));
    }
    let scale = points.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let stencils: Vec<_> = orders.iter().map(|&j| stencil(j)).collect();
    let total: i32 = orders.iter().sum::<usize>() as i32;
    ridders(
        |h| {
            let mut acc: Option<CMat> = None;
            let mut idx = vec![0usize; points.len()];
            loop {
                let mut pts = points.to_vec();
                let mut w = 1.0;
                for c in 0..points.len() {
                    let (off, wc) = stencils[c][idx[c]];
                    pts[c] += Complex64::new(off * h, 0.0);
                    w *= wc;
                }
                let g = eval_gk(sys, &TransferEvalRequest::new(pts, mu.to_vec()))? * Complex64::new(w / h.powi(total), 0.0);
                acc = Some(match acc {
                    Some(a) => a + g,
                    None => g,
                });
                // odometer over the stencil index tuple
                let mut c = 0;
                loop {
                    if c == idx.len() {
                        return Ok(acc.unwrap());
                    }
                    idx[c] += 1;
                    if idx[c] < stencils[c].len() {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
            }
        },
        initial_step(scale),
    )
}

/// `dG_k/dmu_i` by central differences in `mu_i`, extrapolated in the step.
pub fn fd_param_deriv(sys: &StructuredSystem, points: &[Complex64], mu: &[f64], i: usize) -> Result<CMat> {
    if i >= mu.len() {
        return Err(Error::ParamIndex { index: i, dim: mu.len() });
    }
    ridders(
        |h| {
            let at = |sign: f64| {
                let mut m = mu.to_vec();
                m[i] += sign * h;
                eval_gk(sys, &TransferEvalRequest::new(points.to_vec(), m))
            };
            Ok((at(1.0)? - at(-1.0)?) / Complex64::new(2.0 * h, 0.0))
        },
        initial_step(mu[i].abs()),
    )
}

struct Evaluated {
    full: CMat,
    reduced: CMat,
    method: Method,
    oracle_dev: Option<f64>,
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    norm(&(a - b)) / norm(a).max(TINY)
}

fn evaluate(full: &StructuredSystem, reduced: &StructuredSystem, c: &Condition, cross_check: bool) -> Result<Evaluated> {
    let req = TransferEvalRequest::new(c.points.clone(), c.mu.clone()).with_orders(c.orders.clone());
    if let Some(i) = c.mu_index {
        let f = eval_gk_param_grad(full, &req)?.swap_remove(i);
        let r = eval_gk_param_grad(reduced, &req)?.swap_remove(i);
        let oracle_dev = if cross_check {
            let ff = fd_param_deriv(full, &c.points, &c.mu, i)?;
            let fr = fd_param_deriv(reduced, &c.points, &c.mu, i)?;
            Some(rel(&f, &ff).max(rel(&r, &fr)))
        } else {
            None
        };
        return Ok(Evaluated { full: f, reduced: r, method: Method::Analytic, oracle_dev });
    }
    if c.total_order() > MAX_ANALYTIC_ORDER {
        let f = fd_freq_deriv(full, &c.points, &c.orders, &c.mu)?;
        let r = fd_freq_deriv(reduced, &c.points, &c.orders, &c.mu)?;
        return Ok(Evaluated { full: f, reduced: r, method: Method::FiniteDifference, oracle_dev: None });
    }
    let f = eval_gk_freq_deriv(full, &req)?;
    let r = eval_gk_freq_deriv(reduced, &req)?;
    let oracle_dev = if cross_check && (1..=ORACLE_MAX_ORDER).contains(&c.total_order()) {
        let ff = fd_freq_deriv(full, &c.points, &c.orders, &c.mu)?;
        let fr = fd_freq_deriv(reduced, &c.points, &c.orders, &c.mu)?;
        Some(rel(&f, &ff).max(rel(&r, &fr)))
    } else {
        None
    };
    Ok(Evaluated { full: f, reduced: r, method: Method::Analytic, oracle_dev })
}

/// Evaluates every condition on both models and applies the floor rule.
fn check(
    full: &StructuredSystem,
    reduced: &StructuredSystem,
    conditions: Vec<(Condition, bool)>,
    tol: f64,
    cross_check: bool,
) -> VerificationReport {
    let evaluated: Vec<_> = conditions.par_iter().map(|(c, _)| evaluate(full, reduced, c, cross_check)).collect();
    // the floor scales with the largest value of the same tuple over all
    // parameter points
    type Group = (Vec<(u64, u64)>, Vec<usize>, Option<usize>);
    let group = |c: &Condition| -> Group {
        (c.points.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect(), c.orders.clone(), c.mu_index)
    };
    let mut scale: std::collections::HashMap<Group, f64> = Default::default();
    for ((c, _), e) in conditions.iter().zip(&evaluated) {
        if let Ok(e) = e {
            let s = scale.entry(group(c)).or_insert(0.0);
            *s = s.max(norm(&e.full));
        }
    }
    let records = conditions
        .into_iter()
        .zip(evaluated)
        .map(|((c, guaranteed), e)| {
            let mut rec = ConditionRecord {
                id: c.id.clone(),
                kind: c.kind,
                points: c.points.clone(),
                orders: c.orders.clone(),
                mu: c.mu.clone(),
                mu_index: c.mu_index,
                method: Method::Analytic,
                full_norm: f64::NAN,
                reduced_norm: f64::NAN,
                abs_dev: f64::NAN,
                rel_dev: f64::NAN,
                floored: false,
                oracle_dev: None,
                guaranteed,
                tolerance: tol,
                pass: false,
                error: None,
            };
            match e {
                Err(err) => rec.error = Some(err.to_string()),
                Ok(e) => {
                    let floor = RELATIVE_FLOOR * scale[&group(&c)];
                    rec.method = e.method;
                    rec.full_norm = norm(&e.full);
                    rec.reduced_norm = norm(&e.reduced);
                    rec.abs_dev = norm(&(&e.full - &e.reduced));
                    rec.floored = rec.full_norm < floor;
                    rec.rel_dev = if rec.floored {
                        rec.abs_dev / scale[&group(&c)]
                    } else {
                        rec.abs_dev / rec.full_norm.max(TINY)
                    };
                    rec.oracle_dev = e.oracle_dev;
                    rec.pass = rec.rel_dev <= tol && e.oracle_dev.is_none_or(|o| o <= ORACLE_TOL.max(tol));
                }
            }
            rec
        })
        .collect();
    VerificationReport::from_records(records)
}

fn frequency_conditions(spec: &InterpolationSpec, d: usize) -> Vec<Condition> {
    enumerate_conditions(spec, d).into_iter().filter(|c| c.kind != ConditionKind::ParamGradient).collect()
}

/// Value conditions (all derivative orders zero).
pub fn check_lagrange(full: &StructuredSystem, reduced: &StructuredSystem, spec: &InterpolationSpec, tol: f64) -> VerificationReport {
    let conds = frequency_conditions(spec, full.d).into_iter().filter(|c| c.total_order() == 0).map(|c| (c, true)).collect();
    check(full, reduced, conds, tol, false)
}

/// Value and frequency-derivative conditions; derivatives are
/// cross-checked against the difference oracle.
pub fn check_hermite(full: &StructuredSystem, reduced: &StructuredSystem, spec: &InterpolationSpec, tol: f64) -> VerificationReport {
    let conds = frequency_conditions(spec, full.d).into_iter().map(|c| (c, true)).collect();
    check(full, reduced, conds, tol, true)
}

/// Parameter-gradient conditions. Two-sided reductions enforce them for
/// every covered tuple; for other modes every V-chain prefix is evaluated
/// and reported as not guaranteed.
pub fn check_param_gradient(
    full: &StructuredSystem,
    reduced: &StructuredSystem,
    spec: &InterpolationSpec,
    tol: f64,
) -> VerificationReport {
    let conds: Vec<(Condition, bool)> = if spec.sidedness.is_two_sided() {
        enumerate_conditions(spec, full.d)
            .into_iter()
            .filter(|c| c.kind == ConditionKind::ParamGradient)
            .map(|c| (c, true))
            .collect()
    } else {
        let chains = if spec.sidedness.uses_v_chains() { &spec.v_chains } else { &spec.w_chains };
        let mut out = Vec::new();
        for mu in &spec.mu_points {
            for chain in chains {
                for q in 1..=chain.len() {
                    for i in 0..full.d {
                        let points = chain.points[..q].to_vec();
                        if out.iter().any(|(c, _): &(Condition, bool)| c.points == points && &c.mu == mu && c.mu_index == Some(i)) {
                            continue;
                        }
                        let id = format!("param-gradient-{}", out.len());
                        let c = Condition {
                            id,
                            kind: ConditionKind::ParamGradient,
                            points,
                            orders: vec![0; q],
                            mu: mu.clone(),
                            mu_index: Some(i),
                        };
                        out.push((c, false));
                    }
                }
            }
        }
        out
    };
    check(full, reduced, conds, tol, true)
}

/// Tolerances for [`verify_all`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub lagrange: f64,
    pub derivative: f64,
    pub gradient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { lagrange: LAGRANGE_TOL, derivative: DERIVATIVE_TOL, gradient: GRADIENT_TOL }
    }
}

/// Every condition the spec implies: values, derivatives, and parameter
/// gradients, each id exactly once.
pub fn verify_all(full: &StructuredSystem, reduced: &StructuredSystem, spec: &InterpolationSpec, tol: Tolerances) -> VerificationReport {
    let conds = frequency_conditions(spec, full.d);
    let (values, derivs): (Vec<_>, Vec<_>) = conds.into_iter().partition(|c| c.total_order() == 0);
    let a = check(full, reduced, values.into_iter().map(|c| (c, true)).collect(), tol.lagrange, false);
    let b = check(full, reduced, derivs.into_iter().map(|c| (c, true)).collect(), tol.derivative, true);
    let c = check_param_gradient(full, reduced, spec, tol.gradient);
    a.merge(b).merge(c)
}

/// `n` logarithmically spaced points in `[a, b]`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let (la, lb) = (a.log10(), b.log10());
            (0..n).map(|i| 10f64.powf(la + (lb - la) * i as f64 / (n - 1) as f64)).collect()
        }
    }
}

/// `n` evenly spaced points in `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Cartesian product of per-parameter axes, first axis slowest.
pub fn param_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for axis in axes {
        out = out.into_iter().flat_map(|p| axis.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreqErrorRow {
    pub omega: Vec<f64>,
    pub mu: Vec<f64>,
    pub full_norm: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    /// `|G|` fell below the relative floor; `rel_err` holds the absolute
    /// error.
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreqSweep {
    pub level: usize,
    pub rows: Vec<FreqErrorRow>,
    /// Largest relative error over unflagged rows.
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub flagged: usize,
}

impl FreqSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.level {
            write!(out, "omega{},", i + 1).unwrap();
        }
        let d = self.rows.first().map_or(0, |r| r.mu.len());
        for i in 0..d {
            write!(out, "mu{},", i + 1).unwrap();
        }
        out.push_str("full_norm,abs_err,rel_err,flagged\n");
        for r in &self.rows {
            for w in &r.omega {
                write!(out, "{w:.17e},").unwrap();
            }
            for m in &r.mu {
                write!(out, "{m:.17e},").unwrap();
            }
            writeln!(out, "{:.17e},{:.17e},{:.17e},{}", r.full_norm, r.abs_err, r.rel_err, u8::from(r.flagged)).unwrap();
        }
        out
    }
}

/// Relative error of `G_k(i w_1, .., i w_k)` on the tensor grid `omegas^k`
/// times the parameter grid; spectral norm for matrix values.
pub fn error_sweep_freq(
    full: &StructuredSystem,
    reduced: &StructuredSystem,
    omegas: &[f64],
    mu_grid: &[Vec<f64>],
    level: usize,
) -> Result<FreqSweep> {
    if level == 0 {
        return Err(Error::InvalidSpec("transfer function level must be at least 1".into()));
    }
    let mut nodes = Vec::new();
    for mu in mu_grid {
        let mut idx = vec![0usize; level];
        'grid: loop {
            nodes.push((idx.iter().map(|&i| omegas[i]).collect::<Vec<_>>(), mu.clone()));
            let mut c = level;
            loop {
                if c == 0 {
                    break 'grid;
                }
                c -= 1;
                idx[c] += 1;
                if idx[c] < omegas.len() {
                    break;
                }
                idx[c] = 0;
            }
        }
        if omegas.is_empty() {
            nodes.pop();
        }
    }
    let values: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|(w, mu)| {
            let pts: Vec<_> = w.iter().map(|&x| Complex64::new(0.0, x)).collect();
            let req = TransferEvalRequest::new(pts, mu.clone());
            let g = eval_gk(full, &req)?;
            let gr = eval_gk(reduced, &req)?;
            Ok((norm(&g), norm(&(&g - &gr))))
        })
        .collect::<Result<_>>()?;
    let grid_max = values.iter().map(|v| v.0).fold(0.0, f64::max);
    let mut sweep = FreqSweep { level, rows: Vec::with_capacity(nodes.len()), max_rel_err: 0.0, max_abs_err: 0.0, flagged: 0 };
    for ((omega, mu), (g, e)) in nodes.into_iter().zip(values) {
        let flagged = g < RELATIVE_FLOOR * grid_max || g == 0.0;
        let rel_err = if flagged { e } else { e / g };
        if flagged {
            sweep.flagged += 1;
        } else {
            sweep.max_rel_err = sweep.max_rel_err.max(rel_err);
        }
        sweep.max_abs_err = sweep.max_abs_err.max(e);
        sweep.rows.push(FreqErrorRow { omega, mu, full_norm: g, abs_err: e, rel_err, flagged });
    }
    Ok(sweep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeErrorCase {
    pub mu: Vec<f64>,
    /// Largest relative output error over unflagged samples.
    pub max_rel_err: f64,
    pub flagged: usize,
    /// Simulation failure of either model.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeSweep {
    pub t: Vec<f64>,
    pub cases: Vec<TimeErrorCase>,
    /// `rel_err[case][sample]`.
    pub rel_err: Vec<Vec<f64>>,
    pub max_rel_err: f64,
}

impl TimeSweep {
    /// One row per `(mu, t)`.
    pub fn to_csv(&self) -> String {
        let d = self.cases.first().map_or(0, |c| c.mu.len());
        let mut out = String::from("t,");
        for i in 0..d {
            write!(out, "mu{},", i + 1).unwrap();
        }
        out.push_str("rel_err\n");
        for (case, errs) in self.cases.iter().zip(&self.rel_err) {
            for (t, e) in self.t.iter().zip(errs) {
                write!(out, "{t:.17e},").unwrap();
                for m in &case.mu {
                    write!(out, "{m:.17e},").unwrap();
                }
                writeln!(out, "{e:.17e}").unwrap();
            }
        }
        out
    }

    pub fn all_succeeded(&self) -> bool {
        self.cases.iter().all(|c| c.error.is_none())
    }
}

/// Simulates both models for each parameter on the same grid. A failed
/// simulation is recorded on its case and does not stop the sweep.
pub fn error_sweep_time(
    full: &StructuredSystem,
    reduced: &StructuredSystem,
    template: &SimProblem,
    mu_grid: &[Vec<f64>],
) -> Result<TimeSweep> {
    let steps = template.steps()?;
    let runs: Vec<_> = mu_grid
        .par_iter()
        .map(|mu| {
            let prob = SimProblem { mu: mu.clone(), ..template.clone() };
            let run = || -> Result<(Vec<f64>, Vec<bool>)> {
                let a = simulate(full, &prob)?;
                let b = simulate(reduced, &prob)?;
                relative_output_error(&a, &b)
            };
            (mu.clone(), run())
        })
        .collect();
    let t: Vec<f64> = (0..=steps).map(|k| template.t_start + k as f64 * template.step).collect();
    let mut sweep = TimeSweep { t, cases: Vec::new(), rel_err: Vec::new(), max_rel_err: 0.0 };
    for (mu, run) in runs {
        match run {
            Ok((err, flags)) => {
                let max = err.iter().zip(&flags).filter(|(_, f)| !**f).map(|(e, _)| *e).fold(0.0, f64::max);
                sweep.max_rel_err = sweep.max_rel_err.max(max);
                let flagged = flags.iter().filter(|f| **f).count();
                sweep.cases.push(TimeErrorCase { mu, max_rel_err: max, flagged, error: None });
                sweep.rel_err.push(err);
            }
            Err(e) => {
                sweep.cases.push(TimeErrorCase { mu, max_rel_err: f64::NAN, flagged: 0, error: Some(e.to_string()) });
                sweep.rel_err.push(vec![f64::NAN; sweep.t.len()]);
            }
        }
    }
    Ok(sweep)
}
