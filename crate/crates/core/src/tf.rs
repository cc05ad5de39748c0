//! Subsystem transfer functions
//!
//! ```text
//! G_k(s_1..s_k) = C(s_k) K(s_k)^-1 N(s_{k-1}) (I (x) K(s_{k-1})^-1) ... N(s_1) (I (x) K(s_1)^-1 B(s_1))
//! ```
//!
//! evaluated by forward propagation `Z_1 = K(s_1)^-1 B(s_1)`,
//! `Z_j = K(s_j)^-1 [N_1(s_{j-1}) Z_{j-1}, ..., N_m(s_{j-1}) Z_{j-1}]`,
//! `G_k = C(s_k) Z_k`. Kronecker products are never formed. Columns of the
//! `p x m^k` result are ordered with the rightmost factor varying fastest:
//! column `(i_{k-1}, ..., i_1, i_0)` in mixed radix `m`, where `i_{k-1}` picks
//! the outermost `N` block and `i_0` the column of `B`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::matfun::{binom, deriv_action_with, FactorCache, StructuredSystem};

pub const DEFAULT_ENTRY_CAP: usize = 1_000_000;

/// Highest total frequency-derivative order served analytically.
pub const MAX_ANALYTIC_ORDER: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct TransferEvalRequest {
    /// `(s_1, ..., s_k)`.
    pub points: Vec<Complex64>,
    pub mu: Vec<f64>,
    /// Frequency derivative orders `(j_1, ..., j_k)`.
    pub orders: Option<Vec<usize>>,
    pub param_grad: bool,
    pub entry_cap: usize,
}

impl TransferEvalRequest {
    pub fn new(points: Vec<Complex64>, mu: Vec<f64>) -> Self {
        TransferEvalRequest { points, mu, orders: None, param_grad: false, entry_cap: DEFAULT_ENTRY_CAP }
    }

    pub fn with_orders(mut self, orders: Vec<usize>) -> Self {
        self.orders = Some(orders);
        self
    }

    pub fn level(&self) -> usize {
        self.points.len()
    }

    fn validate(&self, sys: &StructuredSystem) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidSpec("transfer function level must be at least 1".into()));
        }
        if let Some(o) = &self.orders {
            if o.len() != self.points.len() {
                return Err(Error::InvalidSpec(format!(
                    "{} derivative orders for {} frequency arguments",
                    o.len(),
                    self.points.len()
                )));
            }
        }
        if self.mu.len() != sys.d {
            return Err(Error::ParamDim { expected: sys.d, got: self.mu.len() });
        }
        check_width(sys.p.max(1), sys.m, self.points.len(), self.entry_cap)?;
        Ok(())
    }
}

/// Rejects `rows * m^k` above `cap`.
pub(crate) fn check_width(rows: usize, m: usize, k: usize, cap: usize) -> Result<()> {
    let entries = (rows as u128).saturating_mul((m as u128).saturating_pow(k as u32));
    if entries > cap as u128 {
        return Err(Error::SizeCap { entries, cap });
    }
    Ok(())
}

/// `[N_1 X, ..., N_m X]` with `N` at `s`, or the `d^order/ds` derivative.
fn stack_n(sys: &StructuredSystem, s: Complex64, mu: &[f64], x: &CMat, order: usize, mu_index: Option<usize>) -> Result<CMat> {
    let w = x.ncols();
    let mut out = CMat::zeros(sys.n, w * sys.m);
    for (j, nj) in sys.bilinear.iter().enumerate() {
        let block = nj.apply(s, mu, x, order, mu_index)?;
        out.columns_mut(j * w, w).copy_from(&block);
    }
    Ok(out)
}

/// `[N_1^H X, ..., N_m^H X]` with derivative `order` at `s`.
fn stack_n_adjoint(sys: &StructuredSystem, s: Complex64, mu: &[f64], x: &CMat, order: usize) -> Result<CMat> {
    let w = x.ncols();
    let mut out = CMat::zeros(sys.n, w * sys.m);
    for (j, nj) in sys.bilinear.iter().enumerate() {
        let block = nj.apply_adjoint(s, mu, x, order, None)?;
        out.columns_mut(j * w, w).copy_from(&block);
    }
    Ok(out)
}

/// V-side levels: `levels[q][j] = d^j_{s_{q+1}} d^{a_q}_{s_q} ... d^{a_1}_{s_1}
/// (K(s_{q+1})^-1 N(s_q) ... K(s_1)^-1 B(s_1))` for `j <= orders[q]`, where
/// each earlier level is differentiated to its full order `a_i = orders[i]`.
pub(crate) fn right_levels(
    sys: &StructuredSystem,
    cache: &FactorCache,
    points: &[Complex64],
    orders: &[usize],
    mu: &[f64],
) -> Result<Vec<Vec<CMat>>> {
    let mut levels: Vec<Vec<CMat>> = Vec::with_capacity(points.len());
    for (q, (&s, &a)) in points.iter().zip(orders).enumerate() {
        let factor = cache.get(s, mu)?;
        let rhs: Vec<CMat> = if q == 0 {
            (0..=a).map(|j| Ok(sys.b.eval_deriv(s, mu, j, None)?.to_dense())).collect::<Result<_>>()?
        } else {
            let prev = &levels[q - 1];
            let sp = points[q - 1];
            let ap = orders[q - 1];
            let mut r = CMat::zeros(sys.n, prev[0].ncols() * sys.m);
            for i in 0..=ap {
                r += stack_n(sys, sp, mu, &prev[ap - i], i, None)? * Complex64::new(binom(ap, i), 0.0);
            }
            let mut rhs = vec![CMat::zeros(sys.n, r.ncols()); a + 1];
            rhs[0] = r;
            rhs
        };
        levels.push(deriv_action_with(&factor, &sys.k, s, mu, &rhs, false)?);
    }
    Ok(levels)
}

/// W-side levels for the chain `(t_1, ..., t_theta)`: `levels[e][i]` is the
/// adjoint block attached to point `t_{theta-e}` (0-based
/// `theta - 1 - e`), differentiated `i <= orders[theta-1-e]` times there and
/// to full order at every later point.
pub(crate) fn left_levels(
    sys: &StructuredSystem,
    cache: &FactorCache,
    points: &[Complex64],
    orders: &[usize],
    mu: &[f64],
) -> Result<Vec<Vec<CMat>>> {
    let theta = points.len();
    let mut levels: Vec<Vec<CMat>> = Vec::with_capacity(theta);
    for e in 0..theta {
        let t = theta - 1 - e;
        let (s, a) = (points[t], orders[t]);
        let factor = cache.get(s, mu)?;
        let rhs: Vec<CMat> = if e == 0 {
            (0..=a)
                .map(|j| Ok(sys.c.eval_deriv(s, mu, j, None)?.to_dense().adjoint()))
                .collect::<Result<_>>()?
        } else {
            let prev = &levels[e - 1][orders[t + 1]];
            (0..=a).map(|j| stack_n_adjoint(sys, s, mu, prev, j)).collect::<Result<_>>()?
        };
        levels.push(deriv_action_with(&factor, &sys.k, s, mu, &rhs, true)?);
    }
    Ok(levels)
}

/// `G_k(s_1, ..., s_k; mu)` as a `p x m^k` matrix.
pub fn eval_gk(sys: &StructuredSystem, req: &TransferEvalRequest) -> Result<CMat> {
    req.validate(sys)?;
    let k = req.level();
    let cache = FactorCache::new(&sys.k);
    let levels = right_levels(sys, &cache, &req.points, &vec![0; k], &req.mu)?;
    sys.c.apply(req.points[k - 1], &req.mu, &levels[k - 1][0], 0, None)
}

/// Scalar-width chain `C K^-1 (prod N K^-1) B` for single-input
/// single-output systems.
pub fn eval_gk_siso(sys: &StructuredSystem, req: &TransferEvalRequest) -> Result<Complex64> {
    if sys.m != 1 || sys.p != 1 {
        return Err(Error::NotSiso { m: sys.m, p: sys.p });
    }
    req.validate(sys)?;
    let mu = &req.mu;
    let cache = FactorCache::new(&sys.k);
    let mut z = cache.get(req.points[0], mu)?.solve(&sys.b.eval(req.points[0], mu)?.to_dense())?;
    for w in req.points.windows(2) {
        let nz = sys.bilinear[0].apply(w[0], mu, &z, 0, None)?;
        z = cache.get(w[1], mu)?.solve(&nz)?;
    }
    let g = sys.c.apply(*req.points.last().unwrap(), mu, &z, 0, None)?;
    Ok(g[(0, 0)])
}

/// Mixed partial `d^{j_1}_{s_1} ... d^{j_k}_{s_k} G_k`, exact.
pub fn eval_gk_freq_deriv(sys: &StructuredSystem, req: &TransferEvalRequest) -> Result<CMat> {
    req.validate(sys)?;
    let k = req.level();
    let orders = req.orders.clone().unwrap_or_else(|| vec![0; k]);
    let total: usize = orders.iter().sum();
    if total > MAX_ANALYTIC_ORDER {
        return Err(Error::UnsupportedOrder(total));
    }
    let cache = FactorCache::new(&sys.k);
    let levels = right_levels(sys, &cache, &req.points, &orders, &req.mu)?;
    let top = &levels[k - 1];
    let a = orders[k - 1];
    let s = req.points[k - 1];
    let mut g = CMat::zeros(sys.p, top[0].ncols());
    for i in 0..=a {
        g += sys.c.apply(s, &req.mu, &top[a - i], i, None)? * Complex64::new(binom(a, i), 0.0);
    }
    Ok(g)
}

/// `[dG_k/dmu_1, ..., dG_k/dmu_d]`, exact, by forward tangent propagation
/// through the factor chain (one differentiated factor per term).
pub fn eval_gk_param_grad(sys: &StructuredSystem, req: &TransferEvalRequest) -> Result<Vec<CMat>> {
    req.validate(sys)?;
    let mu = &req.mu;
    let cache = FactorCache::new(&sys.k);
    let pts = &req.points;
    let mut z = Vec::with_capacity(pts.len());
    z.push(cache.get(pts[0], mu)?.solve(&sys.b.eval(pts[0], mu)?.to_dense())?);
    for j in 1..pts.len() {
        let r = stack_n(sys, pts[j - 1], mu, &z[j - 1], 0, None)?;
        z.push(cache.get(pts[j], mu)?.solve(&r)?);
    }
    let sk = *pts.last().unwrap();
    (0..sys.d)
        .map(|i| {
            let f = cache.get(pts[0], mu)?;
            let db = sys.b.eval_deriv(pts[0], mu, 0, Some(i))?.to_dense();
            let mut dz = f.solve(&(db - sys.k.apply(pts[0], mu, &z[0], 0, Some(i))?))?;
            for j in 1..pts.len() {
                let mut dr = stack_n(sys, pts[j - 1], mu, &z[j - 1], 0, Some(i))?;
                dr += stack_n(sys, pts[j - 1], mu, &dz, 0, None)?;
                dr -= sys.k.apply(pts[j], mu, &z[j], 0, Some(i))?;
                dz = cache.get(pts[j], mu)?.solve(&dr)?;
            }
            let last = z.last().unwrap();
            Ok(sys.c.apply(sk, mu, last, 0, Some(i))? + sys.c.apply(sk, mu, &dz, 0, None)?)
        })
        .collect()
}
