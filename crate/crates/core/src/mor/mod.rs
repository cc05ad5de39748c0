//! Interpolatory projection bases and structure-preserving projection.

mod basis;
mod conditions;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, ConstMatrix};
use crate::matfun::{AffineMatrixFn, FactorCache, StructuredSystem};
use crate::tf::{check_width, left_levels, right_levels, DEFAULT_ENTRY_CAP, MAX_ANALYTIC_ORDER};

pub use basis::{assemble_basis, equalize_ranks};
pub use conditions::{enumerate_conditions, Condition, ConditionKind};

pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Ordered frequency points with per-point derivative orders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub points: Vec<Complex64>,
    pub orders: Vec<usize>,
}

impl Chain {
    pub fn lagrange(points: Vec<Complex64>) -> Self {
        let orders = vec![0; points.len()];
        Chain { points, orders }
    }

    /// `(sigma, ..., sigma)` of length `depth`, each point differentiated up
    /// to `order`.
    pub fn repeated(sigma: Complex64, depth: usize, order: usize) -> Self {
        Chain { points: vec![sigma; depth], orders: vec![order; depth] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn conj(&self) -> Self {
        Chain { points: self.points.iter().map(|z| z.conj()).collect(), orders: self.orders.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    OneSidedV,
    OneSidedW,
    TwoSided,
    TwoSidedIdentical,
}

impl Sidedness {
    pub fn uses_v_chains(self) -> bool {
        !matches!(self, Sidedness::OneSidedW)
    }

    pub fn uses_w_chains(self) -> bool {
        !matches!(self, Sidedness::OneSidedV)
    }

    pub fn is_two_sided(self) -> bool {
        matches!(self, Sidedness::TwoSided | Sidedness::TwoSidedIdentical)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Realify {
    /// On when the system is real and every chain set is closed under
    /// conjugation.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSpec {
    pub mu_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub v_chains: Vec<Chain>,
    #[serde(default)]
    pub w_chains: Vec<Chain>,
    pub sidedness: Sidedness,
    #[serde(default)]
    pub realify: Realify,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

impl InterpolationSpec {
    /// Expands a point set into repeated-point chains of length `depth`.
    /// Identical chains are used on both sides unless the mode is one-sided.
    pub fn from_points(
        points: &[Complex64],
        depth: usize,
        order: usize,
        mu_points: Vec<Vec<f64>>,
        sidedness: Sidedness,
    ) -> Self {
        let chains: Vec<Chain> = points.iter().map(|&p| Chain::repeated(p, depth, order)).collect();
        let (v_chains, w_chains) = match sidedness {
            Sidedness::OneSidedV => (chains, Vec::new()),
            Sidedness::OneSidedW => (Vec::new(), chains),
            _ => (chains.clone(), chains),
        };
        InterpolationSpec { mu_points, v_chains, w_chains, sidedness, realify: Realify::Auto, rank_tol: DEFAULT_RANK_TOL }
    }

    pub fn validate(&self, sys: &StructuredSystem) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.mu_points.is_empty() {
            return bad("no parameter points".into());
        }
        if let Some(mu) = self.mu_points.iter().find(|mu| mu.len() != sys.d) {
            return Err(Error::ParamDim { expected: sys.d, got: mu.len() });
        }
        if !(self.rank_tol >= 0.0 && self.rank_tol < 1.0) {
            return bad(format!("rank tolerance {} outside [0, 1)", self.rank_tol));
        }
        let check = |chains: &[Chain], side: &str, rows: usize| -> Result<()> {
            if chains.is_empty() {
                return Err(Error::InvalidSpec(format!("no {side}-side chains")));
            }
            for (i, c) in chains.iter().enumerate() {
                if c.is_empty() {
                    return Err(Error::InvalidSpec(format!("{side}-side chain {i} is empty")));
                }
                if c.orders.len() != c.points.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{side}-side chain {i}: {} orders for {} points",
                        c.orders.len(),
                        c.points.len()
                    )));
                }
                let total: usize = c.orders.iter().sum();
                if total > MAX_ANALYTIC_ORDER {
                    return Err(Error::UnsupportedOrder(total));
                }
                check_width(rows, sys.m, c.len() - 1, DEFAULT_ENTRY_CAP)?;
            }
            Ok(())
        };
        if self.sidedness.uses_v_chains() {
            check(&self.v_chains, "V", sys.m)?;
        }
        if self.sidedness.uses_w_chains() {
            check(&self.w_chains, "W", sys.p)?;
        }
        if self.sidedness == Sidedness::TwoSidedIdentical && self.v_chains != self.w_chains {
            return bad("two-sided-identical requires equal V- and W-side chains".into());
        }
        Ok(())
    }

    fn closed_under_conjugation(chains: &[Chain]) -> bool {
        chains.iter().all(|c| {
            let cc = c.conj();
            chains.contains(&cc)
        })
    }

    /// Resolves [`Realify::Auto`].
    pub fn realify_for(&self, sys: &StructuredSystem) -> bool {
        match self.realify {
            Realify::On => true,
            Realify::Off => false,
            Realify::Auto => {
                sys.is_real()
                    && (!self.sidedness.uses_v_chains() || Self::closed_under_conjugation(&self.v_chains))
                    && (!self.sidedness.uses_w_chains() || Self::closed_under_conjugation(&self.w_chains))
            }
        }
    }
}

/// Reduction bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionInfo {
    pub realified: bool,
    pub raw_columns_v: usize,
    pub raw_columns_w: usize,
    pub rank_v: usize,
    pub rank_w: usize,
    /// Columns added to the lower-rank basis to make both bases square-compatible.
    pub augmented: usize,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub sys: StructuredSystem,
    pub v: CMat,
    pub w: CMat,
    pub spec: Option<InterpolationSpec>,
    pub info: Option<ReductionInfo>,
}

impl ReducedSystem {
    pub fn order(&self) -> usize {
        self.v.ncols()
    }
}

/// `[V_1, ..., V_k]` for the chain `(sigma_1, ..., sigma_k)`.
pub fn build_v_lagrange(sys: &StructuredSystem, points: &[Complex64], mu: &[f64]) -> Result<Vec<CMat>> {
    let chain = Chain::lagrange(points.to_vec());
    Ok(build_v_hermite(sys, &chain, mu)?.into_iter().map(|mut l| l.swap_remove(0)).collect())
}

/// `[W_1, ..., W_theta]` for the chain `(vs_1, ..., vs_theta)`; `W_1` is
/// attached to `vs_theta`.
pub fn build_w_lagrange(sys: &StructuredSystem, points: &[Complex64], mu: &[f64]) -> Result<Vec<CMat>> {
    let chain = Chain::lagrange(points.to_vec());
    Ok(build_w_hermite(sys, &chain, mu)?.into_iter().map(|mut l| l.swap_remove(0)).collect())
}

/// `blocks[q][j] = V_{q+1, j}` for `j <= orders[q]`.
pub fn build_v_hermite(sys: &StructuredSystem, chain: &Chain, mu: &[f64]) -> Result<Vec<Vec<CMat>>> {
    check_chain(sys, chain, sys.m)?;
    let cache = FactorCache::new(&sys.k);
    right_levels(sys, &cache, &chain.points, &chain.orders, mu)
}

/// `blocks[e][i] = W_{e+1, i}`, attached to point `theta - e` (1-based),
/// with `i <= orders[theta - 1 - e]`.
pub fn build_w_hermite(sys: &StructuredSystem, chain: &Chain, mu: &[f64]) -> Result<Vec<Vec<CMat>>> {
    check_chain(sys, chain, sys.p)?;
    let cache = FactorCache::new(&sys.k);
    left_levels(sys, &cache, &chain.points, &chain.orders, mu)
}

fn check_chain(sys: &StructuredSystem, chain: &Chain, width: usize) -> Result<()> {
    if chain.is_empty() || chain.orders.len() != chain.points.len() {
        return Err(Error::InvalidSpec("chain needs matching, non-empty point and order lists".into()));
    }
    check_width(width, sys.m, chain.len() - 1, DEFAULT_ENTRY_CAP)
}

/// Per-(chain, mu) tasks evaluated in parallel, gathered in input order.
fn side_blocks(sys: &StructuredSystem, chains: &[Chain], mus: &[Vec<f64>], adjoint: bool) -> Result<Vec<CMat>> {
    let tasks: Vec<(&Vec<f64>, &Chain)> = mus.iter().flat_map(|mu| chains.iter().map(move |c| (mu, c))).collect();
    let per_task: Vec<Result<Vec<CMat>>> = tasks
        .par_iter()
        .map(|(mu, c)| {
            let levels = if adjoint { build_w_hermite(sys, c, mu)? } else { build_v_hermite(sys, c, mu)? };
            Ok(levels.into_iter().flatten().collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_task {
        out.extend(r?);
    }
    Ok(out)
}

/// Runs every construction of `spec`, assembles the bases and projects.
pub fn build_spec(sys: &StructuredSystem, spec: &InterpolationSpec) -> Result<ReducedSystem> {
    spec.validate(sys)?;
    let realify = spec.realify_for(sys);
    let mut notes = Vec::new();
    let v_blocks = if spec.sidedness.uses_v_chains() {
        side_blocks(sys, &spec.v_chains, &spec.mu_points, false)?
    } else {
        Vec::new()
    };
    let w_blocks = if spec.sidedness.uses_w_chains() {
        side_blocks(sys, &spec.w_chains, &spec.mu_points, true)?
    } else {
        Vec::new()
    };
    let cols = |b: &[CMat]| b.iter().map(|m| m.ncols()).sum::<usize>();
    let (raw_v, raw_w) = (cols(&v_blocks), cols(&w_blocks));
    let (v, w, rank_v, rank_w, augmented) = match spec.sidedness {
        Sidedness::OneSidedV => {
            let v = assemble_basis(&v_blocks, realify, spec.rank_tol)?;
            notes.push("one-sided projection with W = V: W-side, mixed and parameter-gradient conditions are not enforced".into());
            let r = v.ncols();
            (v.clone(), v, r, r, 0)
        }
        Sidedness::OneSidedW => {
            let w = assemble_basis(&w_blocks, realify, spec.rank_tol)?;
            notes.push("one-sided projection with V = W: V-side, mixed and parameter-gradient conditions are not enforced".into());
            let r = w.ncols();
            (w.clone(), w, r, r, 0)
        }
        _ => {
            let v = assemble_basis(&v_blocks, realify, spec.rank_tol)?;
            let w = assemble_basis(&w_blocks, realify, spec.rank_tol)?;
            let (rv, rw) = (v.ncols(), w.ncols());
            let (v, w, added) = equalize_ranks(v, w);
            if added > 0 {
                notes.push(format!(
                    "bases had ranks {rv} (V) and {rw} (W); the smaller one was extended by {added} directions of the other"
                ));
            }
            (v, w, rv, rw, added)
        }
    };
    let mut reduced = project(sys, &v, &w)?;
    reduced.spec = Some(spec.clone());
    reduced.info = Some(ReductionInfo {
        realified: realify,
        raw_columns_v: raw_v,
        raw_columns_w: raw_w,
        rank_v,
        rank_w,
        augmented,
        notes,
    });
    Ok(reduced)
}

/// Term-wise Petrov-Galerkin projection; coefficients are kept as they are.
pub fn project(sys: &StructuredSystem, v: &CMat, w: &CMat) -> Result<ReducedSystem> {
    if v.nrows() != sys.n || w.nrows() != sys.n {
        return Err(Error::dim(format!("bases have {} and {} rows, system order is {}", v.nrows(), w.nrows(), sys.n)));
    }
    if v.ncols() != w.ncols() {
        return Err(Error::dim(format!("bases have {} and {} columns", v.ncols(), w.ncols())));
    }
    let r = v.ncols();
    let proj = |f: &AffineMatrixFn, rows: usize, cols: usize, left: bool, right: bool| {
        f.map_matrices(rows, cols, |a| {
            let m = match (left, right) {
                (true, true) => a.project(w, v),
                (true, false) => a.adjoint_mul_dense(w).adjoint(),
                (false, true) => a.mul_dense(v),
                (false, false) => a.to_dense(),
            };
            ConstMatrix::Dense(m)
        })
    };
    let c = proj(&sys.c, sys.p, r, false, true)?;
    let k = proj(&sys.k, r, r, true, true)?;
    let b = proj(&sys.b, r, sys.m, true, false)?;
    let n = sys.bilinear.iter().map(|nj| proj(nj, r, r, true, true)).collect::<Result<Vec<_>>>()?;
    let reduced = StructuredSystem::new(c, k, b, n, sys.structure)?;
    Ok(ReducedSystem { sys: reduced, v: v.clone(), w: w.clone(), spec: None, info: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::matfun::Structure;
    use crate::scalarfun::ScalarFn;
    use crate::tf::{eval_gk, TransferEvalRequest};

    fn scalar(v: f64) -> ConstMatrix {
        ConstMatrix::Dense(CMat::from_element(1, 1, Complex64::new(v, 0.0)))
    }

    fn toy() -> StructuredSystem {
        let k = AffineMatrixFn::new(1, 1, 1, vec![(ScalarFn::parse("s + mu[0]", 1).unwrap(), scalar(1.0))]).unwrap();
        let one = AffineMatrixFn::constant(scalar(1.0), 1);
        let n = AffineMatrixFn::constant(scalar(0.5), 1);
        StructuredSystem::new(one.clone(), k, one, vec![n], Structure::FirstOrder).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn toy_lagrange_blocks() {
        let sys = toy();
        let v = build_v_lagrange(&sys, &[re(0.0), re(1.0)], &[1.0]).unwrap();
        assert_eq!((v[0][(0, 0)], v[1][(0, 0)]), (ONE, re(0.25)));
        let w = build_w_lagrange(&sys, &[re(1.0), re(0.0)], &[1.0]).unwrap();
        assert_eq!((w[0][(0, 0)], w[1][(0, 0)]), (ONE, re(0.25)));
    }

    #[test]
    fn toy_hermite_blocks() {
        let sys = toy();
        let v = build_v_hermite(&sys, &Chain { points: vec![ZERO], orders: vec![1] }, &[1.0]).unwrap();
        assert_eq!((v[0][0][(0, 0)], v[0][1][(0, 0)]), (ONE, -ONE));
        let w = build_w_hermite(&sys, &Chain { points: vec![ZERO], orders: vec![1] }, &[1.0]).unwrap();
        assert_eq!((w[0][0][(0, 0)], w[0][1][(0, 0)]), (ONE, -ONE));
        let k1 = AffineMatrixFn::new(1, 1, 0, vec![(ScalarFn::parse("s + 1", 0).unwrap(), scalar(1.0))]).unwrap();
        let one = AffineMatrixFn::constant(scalar(1.0), 0);
        let s1 = StructuredSystem::new(one.clone(), k1, one.clone(), vec![one], Structure::FirstOrder).unwrap();
        let v = build_v_hermite(&s1, &Chain { points: vec![ZERO], orders: vec![2] }, &[]).unwrap();
        assert_eq!(v[0][2][(0, 0)], re(2.0));
    }

    #[test]
    fn identity_projection_is_exact() {
        let sys = toy();
        let eye = CMat::identity(1, 1);
        let red = project(&sys, &eye, &eye).unwrap();
        for pts in [vec![re(0.3)], vec![re(0.3), Complex64::new(0.0, 2.0)]] {
            let r = TransferEvalRequest::new(pts, vec![1.7]);
            assert_eq!(eval_gk(&sys, &r).unwrap(), eval_gk(&red.sys, &r).unwrap());
        }
    }

    #[test]
    fn toy_two_sided_reduction_interpolates() {
        let sys = toy();
        let spec = InterpolationSpec::from_points(&[ZERO], 1, 0, vec![vec![1.0]], Sidedness::TwoSidedIdentical);
        let red = build_spec(&sys, &spec).unwrap();
        assert_eq!(red.order(), 1);
        let r = TransferEvalRequest::new(vec![ZERO], vec![1.0]);
        assert!((eval_gk(&sys, &r).unwrap() - eval_gk(&red.sys, &r).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn spec_validation() {
        let sys = toy();
        let mut spec = InterpolationSpec::from_points(&[ZERO], 2, 0, vec![vec![1.0]], Sidedness::TwoSidedIdentical);
        spec.w_chains[0].points[0] = ONE;
        assert!(matches!(spec.validate(&sys), Err(Error::InvalidSpec(_))));
        let spec = InterpolationSpec::from_points(&[ZERO], 2, 0, vec![vec![1.0, 2.0]], Sidedness::OneSidedV);
        assert!(matches!(spec.validate(&sys), Err(Error::ParamDim { .. })));
        let mut spec = InterpolationSpec::from_points(&[ZERO], 2, 0, vec![vec![1.0]], Sidedness::OneSidedV);
        spec.v_chains[0].orders.pop();
        assert!(spec.validate(&sys).is_err());
    }

    #[test]
    fn realify_auto_rules() {
        let sys = toy();
        let i = Complex64::new(0.0, 1.0);
        let spec = InterpolationSpec::from_points(&[i, -i], 1, 0, vec![vec![1.0]], Sidedness::TwoSided);
        assert!(spec.realify_for(&sys));
        let spec = InterpolationSpec::from_points(&[i], 1, 0, vec![vec![1.0]], Sidedness::TwoSided);
        assert!(!spec.realify_for(&sys));
    }
}
