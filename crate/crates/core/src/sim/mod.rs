//! Fixed-step time integration of structured bilinear systems.
//!
//! The system's matrix functions are read back as differential operators:
//! in `K(s, mu)` a factor `s` is a time derivative and `exp(-tau s)` a delay
//! by `tau`, so `K x = B u + sum_j N_j x u_j` becomes a linear ODE or DDE in
//! `x` once `u(t)` is known. Every step is one implicit-midpoint linear
//! solve; delayed states come from stored grid values.

mod signal;

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, ConstMatrix, Factorization, ZERO};
use crate::matfun::{AffineMatrixFn, StructuredSystem};

pub use signal::Signal;

/// Settings for one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimProblem {
    pub mu: Vec<f64>,
    /// One signal per input.
    pub inputs: Vec<Signal>,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    /// Initial state; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Initial velocity of a second-order system; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    /// Constant state on the lag interval before `t_start`. Defaults to `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<f64>>,
}

impl SimProblem {
    pub fn new(mu: Vec<f64>, inputs: Vec<Signal>, t_end: f64, step: f64) -> Self {
        SimProblem { mu, inputs, t_start: 0.0, t_end, step, x0: None, v0: None, history: None }
    }

    /// Number of steps; the interval must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Simulation(format!("step must be positive, got {}", self.step)));
        }
        let len = self.t_end - self.t_start;
        if len.is_nan() || len < 0.0 {
            return Err(Error::Simulation("t_end lies before t_start".into()));
        }
        let k = (len / self.step).round();
        if (k * self.step - len).abs() > 1e-9 * len.max(self.step) {
            return Err(Error::Simulation(format!("interval length {len} is not a multiple of the step {}", self.step)));
        }
        Ok(k as usize)
    }

    fn times(&self, steps: usize) -> Vec<f64> {
        (0..=steps).map(|k| self.t_start + k as f64 * self.step).collect()
    }
}

/// Output samples on the time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// One row per time point, one column per output.
    pub y: CMat,
}

impl Trajectory {
    /// `t,y1,..,yp` with real parts of the outputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 0..self.y.ncols() {
            write!(out, ",y{}", j + 1).unwrap();
        }
        out.push('\n');
        for (i, t) in self.t.iter().enumerate() {
            write!(out, "{t:.17e}").unwrap();
            for j in 0..self.y.ncols() {
                write!(out, ",{:.17e}", self.y[(i, j)].re).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// `E x' = A x + sum_i A_i x(t - tau_i) + B u + sum_j u_j N_j x`, `y = C x`.
struct FirstOrderForm {
    e: ConstMatrix,
    a: ConstMatrix,
    delays: Vec<(f64, ConstMatrix)>,
    b: CMat,
    c: CMat,
    n: Vec<Option<ConstMatrix>>,
}

fn neg(m: &ConstMatrix) -> ConstMatrix {
    ConstMatrix::linear_combination(m.rows(), m.cols(), &[(Complex64::new(-1.0, 0.0), m)])
}

/// Evaluates a matrix function that must not depend on `s`.
fn frozen(f: &AffineMatrixFn, mu: &[f64], what: &str) -> Result<ConstMatrix> {
    if f.depends_on_s() {
        return Err(Error::Simulation(format!("{what} depends on s, which has no time-domain reading here")));
    }
    f.eval(ZERO, mu)
}

fn first_order_form(sys: &StructuredSystem, mu: &[f64]) -> Result<FirstOrderForm> {
    let n = sys.n;
    let mut e = Vec::new();
    let mut a = Vec::new();
    let mut delays: Vec<(f64, Vec<ConstMatrix>)> = Vec::new();
    for part in sys.k.frequency_parts() {
        let m = part.eval(n, n, mu)?;
        if part.exp_rate.im != 0.0 || part.exp_rate.re > 0.0 {
            return Err(Error::Simulation(format!("K has a non-causal factor exp({}*s)", part.exp_rate)));
        }
        match (part.s_pow, part.exp_rate.re == 0.0) {
            (0, true) => a.push(neg(&m)),
            (1, true) => e.push(m),
            (0, false) => {
                let tau = -part.exp_rate.re;
                match delays.iter_mut().find(|(t, _)| *t == tau) {
                    Some((_, v)) => v.push(neg(&m)),
                    None => delays.push((tau, vec![neg(&m)])),
                }
            }
            (q, true) => {
                return Err(Error::Simulation(format!("K contains s^{q}; use the second-order integrator")));
            }
            _ => return Err(Error::Simulation("neutral delay terms s^q exp(-tau s) are not supported".into())),
        }
    }
    let sum = |parts: Vec<ConstMatrix>| {
        let one = Complex64::new(1.0, 0.0);
        let refs: Vec<_> = parts.iter().map(|m| (one, m)).collect();
        ConstMatrix::linear_combination(n, n, &refs)
    };
    let n_mats = sys
        .bilinear
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if f.is_zero() {
                Ok(None)
            } else {
                frozen(f, mu, &format!("N_{}", j + 1)).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    Ok(FirstOrderForm {
        e: sum(e),
        a: sum(a),
        delays: delays.into_iter().map(|(t, v)| (t, sum(v))).collect(),
        b: frozen(&sys.b, mu, "B")?.to_dense(),
        c: frozen(&sys.c, mu, "C")?.to_dense(),
        n: n_mats,
    })
}

/// Interleaved companion form on `z = (x_1, v_1, x_2, v_2, ..)`, which
/// keeps banded second-order matrices banded.
fn companion_form(sys: &StructuredSystem, mu: &[f64]) -> Result<FirstOrderForm> {
    let parts = sys.second_order_parts()?;
    let n = sys.n;
    let ev = |f: &AffineMatrixFn| f.eval(ZERO, mu);
    let mass = ev(&parts.mass)?;
    Factorization::new(&mass).map_err(|_| Error::Simulation("mass matrix is singular".into()))?;
    let damping = ev(&parts.damping)?;
    let stiffness = ev(&parts.stiffness)?;
    let one = Complex64::new(1.0, 0.0);
    let x = |i: usize| 2 * i;
    let v = |i: usize| 2 * i + 1;

    let mut e = Vec::new();
    let mut a = Vec::new();
    for i in 0..n {
        e.push((x(i), x(i), one));
        a.push((x(i), v(i), one));
    }
    for (r, c, z) in mass.triplets() {
        e.push((v(r), v(c), z));
    }
    for (r, c, z) in stiffness.triplets() {
        a.push((v(r), x(c), -z));
    }
    for (r, c, z) in damping.triplets() {
        a.push((v(r), v(c), -z));
    }
    let mut n_mats = Vec::with_capacity(sys.m);
    for (np, nv) in parts.n_p.iter().zip(&parts.n_v) {
        if np.is_zero() && nv.is_zero() {
            n_mats.push(None);
            continue;
        }
        let mut t = Vec::new();
        for (r, c, z) in ev(np)?.triplets() {
            t.push((v(r), x(c), z));
        }
        for (r, c, z) in ev(nv)?.triplets() {
            t.push((v(r), v(c), z));
        }
        n_mats.push(Some(ConstMatrix::from_triplets(2 * n, 2 * n, t)?));
    }
    let b_u = ev(&parts.b_u)?.to_dense();
    let mut b = CMat::zeros(2 * n, sys.m);
    for i in 0..n {
        b.set_row(v(i), &b_u.row(i));
    }
    let c_p = ev(&parts.c_p)?.to_dense();
    let c_v = ev(&parts.c_v)?.to_dense();
    let mut c = CMat::zeros(sys.p, 2 * n);
    for i in 0..n {
        c.set_column(x(i), &c_p.column(i));
        c.set_column(v(i), &c_v.column(i));
    }
    Ok(FirstOrderForm {
        e: ConstMatrix::from_triplets(2 * n, 2 * n, e)?,
        a: ConstMatrix::from_triplets(2 * n, 2 * n, a)?,
        delays: Vec::new(),
        b,
        c,
        n: n_mats,
    })
}

fn state_vector(v: &Option<Vec<f64>>, n: usize, what: &str) -> Result<CMat> {
    match v {
        None => Ok(CMat::zeros(n, 1)),
        Some(v) if v.len() == n => Ok(CMat::from_iterator(n, 1, v.iter().map(|&x| Complex64::new(x, 0.0)))),
        Some(v) => Err(Error::dim(format!("{what} has length {}, expected {n}", v.len()))),
    }
}

const CACHE_LIMIT: usize = 32;

fn integrate(form: &FirstOrderForm, prob: &SimProblem, x0: CMat, history: CMat) -> Result<Trajectory> {
    let n = x0.nrows();
    let m = form.b.ncols();
    if prob.inputs.len() != m {
        return Err(Error::dim(format!("{} input signals for {m} inputs", prob.inputs.len())));
    }
    let steps = prob.steps()?;
    let h = prob.step;
    let mut lags = Vec::with_capacity(form.delays.len());
    for (tau, ad) in &form.delays {
        let l = (tau / h).round();
        if l < 1.0 || (l * h - tau).abs() > 1e-9 * tau {
            return Err(Error::Simulation(format!("delay {tau} is not a positive multiple of the step {h}")));
        }
        lags.push((l as usize, ad));
    }
    let depth = lags.iter().map(|(l, _)| *l).max().unwrap_or(0);
    // ring[k % (depth + 1)] holds x_k for the last depth + 1 steps
    let mut ring: Vec<CMat> = vec![history.clone(); depth + 1];
    let past = |ring: &Vec<CMat>, k: isize| -> CMat {
        if k < 0 {
            history.clone()
        } else {
            ring[k as usize % (depth + 1)].clone()
        }
    };

    let half = Complex64::new(h / 2.0, 0.0);
    let mut cache: HashMap<Vec<u64>, Factorization> = HashMap::new();
    let mut y = CMat::zeros(steps + 1, form.c.nrows());
    let mut x = x0;
    y.row_mut(0).copy_from(&(&form.c * &x).transpose());
    ring[0] = x.clone();
    let bilinear: Vec<(usize, &ConstMatrix)> =
        form.n.iter().enumerate().filter_map(|(j, nj)| nj.as_ref().map(|nj| (j, nj))).collect();

    for k in 0..steps {
        let tm = prob.t_start + (k as f64 + 0.5) * h;
        let u: Vec<f64> = prob.inputs.iter().map(|s| s.eval(tm)).collect();
        let key: Vec<u64> = bilinear.iter().map(|(j, _)| u[*j].to_bits()).collect();
        if !cache.contains_key(&key) {
            if cache.len() >= CACHE_LIMIT {
                cache.clear();
            }
            let mut parts = vec![(Complex64::new(1.0, 0.0), &form.e), (-half, &form.a)];
            for (j, nj) in &bilinear {
                parts.push((-half * u[*j], *nj));
            }
            let s = ConstMatrix::linear_combination(n, n, &parts);
            let f = Factorization::new(&s)
                .map_err(|_| Error::Simulation(format!("singular step matrix at step {k} (t = {tm})")))?;
            cache.insert(key.clone(), f);
        }
        let mut rhs = form.e.mul_dense(&x) + form.a.mul_dense(&x) * half;
        for (j, nj) in &bilinear {
            rhs += nj.mul_dense(&x) * (half * u[*j]);
        }
        let uv = CMat::from_iterator(m, 1, u.iter().map(|&v| Complex64::new(v, 0.0)));
        rhs += &form.b * uv * Complex64::new(h, 0.0);
        for (l, ad) in &lags {
            let lagged = past(&ring, k as isize - *l as isize) + past(&ring, k as isize + 1 - *l as isize);
            rhs += ad.mul_dense(&lagged) * half;
        }
        x = cache[&key].solve(&rhs);
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Simulation(format!("state became non-finite at step {} (t = {})", k + 1, tm + h / 2.0)));
        }
        ring[(k + 1) % (depth + 1)] = x.clone();
        y.row_mut(k + 1).copy_from(&(&form.c * &x).transpose());
    }
    Ok(Trajectory { t: prob.times(steps), y })
}

fn check_mu(sys: &StructuredSystem, prob: &SimProblem) -> Result<()> {
    if prob.mu.len() != sys.d {
        return Err(Error::ParamDim { expected: sys.d, got: prob.mu.len() });
    }
    Ok(())
}

/// Implicit midpoint for `E x' = A x + B u + sum_j N_j x u_j`, `y = C x`.
pub fn simulate_first_order(sys: &StructuredSystem, prob: &SimProblem) -> Result<Trajectory> {
    check_mu(sys, prob)?;
    let form = first_order_form(sys, &prob.mu)?;
    if !form.delays.is_empty() {
        return Err(Error::Simulation("system has delay terms; use the delay integrator".into()));
    }
    let x0 = state_vector(&prob.x0, sys.n, "x0")?;
    integrate(&form, prob, x0.clone(), x0)
}

/// Method of steps for constant delays; every delay must be a whole number
/// of steps. The history is constant on the lag interval.
pub fn simulate_delay(sys: &StructuredSystem, prob: &SimProblem) -> Result<Trajectory> {
    check_mu(sys, prob)?;
    let form = first_order_form(sys, &prob.mu)?;
    let hist = state_vector(&prob.history.clone().or_else(|| prob.x0.clone()), sys.n, "history")?;
    let x0 = match &prob.x0 {
        Some(_) => state_vector(&prob.x0, sys.n, "x0")?,
        None => hist.clone(),
    };
    integrate(&form, prob, x0, hist)
}

/// `M x'' + D x' + K x = B u + sum_j (N_p,j x + N_v,j x') u_j` through its
/// companion form; `y = C_p x + C_v x'`.
pub fn simulate_second_order(sys: &StructuredSystem, prob: &SimProblem) -> Result<Trajectory> {
    check_mu(sys, prob)?;
    let form = companion_form(sys, &prob.mu)?;
    let x0 = state_vector(&prob.x0, sys.n, "x0")?;
    let v0 = state_vector(&prob.v0, sys.n, "v0")?;
    let mut z = CMat::zeros(2 * sys.n, 1);
    for i in 0..sys.n {
        z[(2 * i, 0)] = x0[(i, 0)];
        z[(2 * i + 1, 0)] = v0[(i, 0)];
    }
    integrate(&form, prob, z.clone(), z)
}

/// Picks the integrator from the shape of `K`: a quadratic term selects
/// the second-order path, delay terms the method of steps.
pub fn simulate(sys: &StructuredSystem, prob: &SimProblem) -> Result<Trajectory> {
    let parts = sys.k.frequency_parts();
    if parts.iter().any(|p| p.s_pow >= 2) {
        simulate_second_order(sys, prob)
    } else if parts.iter().any(|p| p.exp_rate != ZERO) {
        simulate_delay(sys, prob)
    } else {
        simulate_first_order(sys, prob)
    }
}

/// Relative output error `max_j |y_j - yhat_j| / |y_j|` per time point.
///
/// Samples where `|y_j|` is below `1e-12` times its largest magnitude on the
/// grid are measured absolutely and flagged.
pub fn relative_output_error(full: &Trajectory, reduced: &Trajectory) -> Result<(Vec<f64>, Vec<bool>)> {
    if full.y.shape() != reduced.y.shape() {
        return Err(Error::dim("trajectories have different shapes"));
    }
    let (nt, p) = full.y.shape();
    let scale: Vec<f64> = (0..p).map(|j| full.y.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
    let mut err = vec![0.0f64; nt];
    let mut flagged = vec![false; nt];
    for i in 0..nt {
        for (j, &sj) in scale.iter().enumerate() {
            let d = (full.y[(i, j)] - reduced.y[(i, j)]).norm();
            let r = full.y[(i, j)].norm();
            let e = if r < 1e-12 * sj || r == 0.0 {
                flagged[i] = true;
                d
            } else {
                d / r
            };
            err[i] = err[i].max(e);
        }
    }
    Ok((err, flagged))
}
