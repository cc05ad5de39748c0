//! Affine matrix functions `F(s, mu) = sum_j h_j(s, mu) F_j`, the structured
//! system container, and the shifted solves built on top of them.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, ConstMatrix, Factorization, ZERO};
use crate::scalarfun::ScalarFn;

#[derive(Clone, Debug)]
pub struct AffineMatrixFn {
    rows: usize,
    cols: usize,
    dim: usize,
    terms: Vec<(ScalarFn, Arc<ConstMatrix>)>,
}

impl AffineMatrixFn {
    pub fn new(rows: usize, cols: usize, dim: usize, terms: Vec<(ScalarFn, ConstMatrix)>) -> Result<Self> {
        Self::from_shared(rows, cols, dim, terms.into_iter().map(|(h, m)| (h, Arc::new(m))).collect())
    }

    pub fn from_shared(rows: usize, cols: usize, dim: usize, terms: Vec<(ScalarFn, Arc<ConstMatrix>)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::dim("affine matrix function needs at least one term"));
        }
        let mut checked = Vec::with_capacity(terms.len());
        for (j, (h, m)) in terms.into_iter().enumerate() {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::dim(format!(
                    "term {j} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
            if h.dim() > dim {
                return Err(Error::ParamDim { expected: dim, got: h.dim() });
            }
            checked.push((h.with_dim(dim)?, m));
        }
        Ok(AffineMatrixFn { rows, cols, dim, terms: checked })
    }

    /// `1 * A`.
    pub fn constant(mat: ConstMatrix, dim: usize) -> Self {
        Self::new(mat.rows(), mat.cols(), dim, vec![(ScalarFn::one(dim), mat)]).unwrap()
    }

    pub fn zeros(rows: usize, cols: usize, dim: usize) -> Self {
        let m = ConstMatrix::from_triplets(rows, cols, Vec::new()).unwrap();
        Self::constant(m, dim)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn param_dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(ScalarFn, Arc<ConstMatrix>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(h, m)| h.is_zero() || m.is_zero())
    }

    pub fn depends_on_s(&self) -> bool {
        self.terms.iter().any(|(h, m)| h.depends_on_s() && !m.is_zero())
    }

    pub fn depends_on_mu(&self) -> bool {
        self.terms.iter().any(|(h, m)| h.depends_on_mu() && !m.is_zero())
    }

    /// Real constant matrices and coefficients that commute with conjugation.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(h, m)| h.is_real() && m.is_real())
    }

    fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.dim {
            return Err(Error::ParamDim { expected: self.dim, got: mu.len() });
        }
        Ok(())
    }

    /// Coefficients `d^s_order/ds (d/dmu_i) h_j` at `(s, mu)`.
    pub fn coefficients(&self, s: Complex64, mu: &[f64], s_order: usize, mu_index: Option<usize>) -> Result<Vec<Complex64>> {
        self.check_mu(mu)?;
        self.terms
            .iter()
            .map(|(h, _)| {
                let h = match mu_index {
                    Some(i) => h.diff_mu(i)?,
                    None => h.clone(),
                };
                h.diff_s(s_order).eval(s, mu)
            })
            .collect()
    }

    pub fn eval(&self, s: Complex64, mu: &[f64]) -> Result<ConstMatrix> {
        self.eval_deriv(s, mu, 0, None)
    }

    pub fn eval_deriv(&self, s: Complex64, mu: &[f64], s_order: usize, mu_index: Option<usize>) -> Result<ConstMatrix> {
        let c = self.coefficients(s, mu, s_order, mu_index)?;
        let parts: Vec<(Complex64, &ConstMatrix)> = c.into_iter().zip(self.terms.iter().map(|(_, m)| &**m)).collect();
        Ok(ConstMatrix::linear_combination(self.rows, self.cols, &parts))
    }

    /// `(d^s_order F)(s, mu) * X` without assembling the matrix.
    pub fn apply(&self, s: Complex64, mu: &[f64], x: &CMat, s_order: usize, mu_index: Option<usize>) -> Result<CMat> {
        if x.nrows() != self.cols {
            return Err(Error::dim(format!("operand has {} rows, expected {}", x.nrows(), self.cols)));
        }
        let c = self.coefficients(s, mu, s_order, mu_index)?;
        let mut y = CMat::zeros(self.rows, x.ncols());
        for (a, (_, m)) in c.into_iter().zip(&self.terms) {
            if a != ZERO {
                y += m.mul_dense(x) * a;
            }
        }
        Ok(y)
    }

    /// `(d^s_order F)(s, mu)^H * X`.
    pub fn apply_adjoint(
        &self,
        s: Complex64,
        mu: &[f64],
        x: &CMat,
        s_order: usize,
        mu_index: Option<usize>,
    ) -> Result<CMat> {
        if x.nrows() != self.rows {
            return Err(Error::dim(format!("operand has {} rows, expected {}", x.nrows(), self.rows)));
        }
        let c = self.coefficients(s, mu, s_order, mu_index)?;
        let mut y = CMat::zeros(self.cols, x.ncols());
        for (a, (_, m)) in c.into_iter().zip(&self.terms) {
            if a != ZERO {
                y += m.adjoint_mul_dense(x) * a.conj();
            }
        }
        Ok(y)
    }

    /// Replaces every constant matrix, keeping the coefficients.
    pub fn map_matrices(&self, rows: usize, cols: usize, f: impl Fn(&ConstMatrix) -> ConstMatrix) -> Result<Self> {
        let terms = self.terms.iter().map(|(h, m)| (h.clone(), f(m))).collect();
        Self::new(rows, cols, self.dim, terms)
    }

    /// Groups terms by frequency dependence `s^q * exp(a*s)`; each group
    /// has coefficients depending on `mu` only. Groups are ordered by first
    /// appearance.
    pub fn frequency_parts(&self) -> Vec<FrequencyPart> {
        let mut parts: Vec<FrequencyPart> = Vec::new();
        for (h, m) in &self.terms {
            for (q, a, rest) in h.split_by_frequency() {
                match parts.iter_mut().find(|p| p.s_pow == q && p.exp_rate == a) {
                    Some(p) => p.terms.push((rest, m.clone())),
                    None => parts.push(FrequencyPart { s_pow: q, exp_rate: a, terms: vec![(rest, m.clone())] }),
                }
            }
        }
        parts
    }
}

/// One group of [`AffineMatrixFn::frequency_parts`].
#[derive(Clone, Debug)]
pub struct FrequencyPart {
    pub s_pow: u32,
    pub exp_rate: Complex64,
    pub terms: Vec<(ScalarFn, Arc<ConstMatrix>)>,
}

impl FrequencyPart {
    /// `sum_j g_j(mu) A_j`.
    pub fn eval(&self, rows: usize, cols: usize, mu: &[f64]) -> Result<ConstMatrix> {
        let mut parts = Vec::with_capacity(self.terms.len());
        for (g, m) in &self.terms {
            parts.push((g.eval(ZERO, mu)?, &**m));
        }
        Ok(ConstMatrix::linear_combination(rows, cols, &parts))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    FirstOrder,
    SecondOrder,
    TimeDelay,
    Custom,
}

/// The quadruple `(C, K, B, [N_1 .. N_m])`.
#[derive(Clone, Debug)]
pub struct StructuredSystem {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub d: usize,
    pub c: AffineMatrixFn,
    pub k: AffineMatrixFn,
    pub b: AffineMatrixFn,
    pub bilinear: Vec<AffineMatrixFn>,
    pub structure: Structure,
}

/// `K = s^2 M + s D + K_stiff`, `C = C_p + s C_v`, `N_j = N_p,j + s N_v,j`.
#[derive(Clone, Debug)]
pub struct SecondOrderParts {
    pub mass: AffineMatrixFn,
    pub damping: AffineMatrixFn,
    pub stiffness: AffineMatrixFn,
    pub b_u: AffineMatrixFn,
    pub c_p: AffineMatrixFn,
    pub c_v: AffineMatrixFn,
    pub n_p: Vec<AffineMatrixFn>,
    pub n_v: Vec<AffineMatrixFn>,
}

impl StructuredSystem {
    pub fn new(
        c: AffineMatrixFn,
        k: AffineMatrixFn,
        b: AffineMatrixFn,
        bilinear: Vec<AffineMatrixFn>,
        structure: Structure,
    ) -> Result<Self> {
        let n = k.rows();
        let m = b.cols();
        let p = c.rows();
        let d = k.param_dim();
        let mut problems = Vec::new();
        if k.cols() != n {
            problems.push(format!("K is {}x{}, not square", k.rows(), k.cols()));
        }
        if b.rows() != n {
            problems.push(format!("B has {} rows, expected {n}", b.rows()));
        }
        if c.cols() != n {
            problems.push(format!("C has {} columns, expected {n}", c.cols()));
        }
        if bilinear.len() != m {
            problems.push(format!("{} bilinear terms for {m} inputs", bilinear.len()));
        }
        for (j, nj) in bilinear.iter().enumerate() {
            if nj.rows() != n || nj.cols() != n {
                problems.push(format!("N_{} is {}x{}, expected {n}x{n}", j + 1, nj.rows(), nj.cols()));
            }
        }
        if let Some(bad) = [&c, &b].into_iter().chain(&bilinear).find(|f| f.param_dim() != d) {
            return Err(Error::ParamDim { expected: d, got: bad.param_dim() });
        }
        if !problems.is_empty() {
            return Err(Error::dim(problems.join("; ")));
        }
        Ok(StructuredSystem { n, m, p, d, c, k, b, bilinear, structure })
    }

    pub fn is_real(&self) -> bool {
        [&self.c, &self.k, &self.b].into_iter().chain(&self.bilinear).all(AffineMatrixFn::is_real)
    }

    pub fn has_bilinear_terms(&self) -> bool {
        self.bilinear.iter().any(|nj| !nj.is_zero())
    }

    /// Decomposes the system by powers of `s`. Fails when `K` is not a
    /// polynomial of degree at most two, or `B` depends on `s`, or `C`, `N`
    /// are not affine in `s`.
    pub fn second_order_parts(&self) -> Result<SecondOrderParts> {
        let by_degree = |f: &AffineMatrixFn, max: u32, what: &str| -> Result<Vec<AffineMatrixFn>> {
            let mut out: Vec<Vec<(ScalarFn, Arc<ConstMatrix>)>> = vec![Vec::new(); max as usize + 1];
            for part in f.frequency_parts() {
                if part.exp_rate != ZERO || part.s_pow > max {
                    return Err(Error::InvalidSpec(format!("{what} is not a polynomial of degree <= {max} in s")));
                }
                out[part.s_pow as usize].extend(part.terms);
            }
            out.into_iter()
                .map(|t| {
                    if t.is_empty() {
                        Ok(AffineMatrixFn::zeros(f.rows(), f.cols(), f.param_dim()))
                    } else {
                        AffineMatrixFn::from_shared(f.rows(), f.cols(), f.param_dim(), t)
                    }
                })
                .collect()
        };
        let mut k = by_degree(&self.k, 2, "K")?;
        let mut c = by_degree(&self.c, 1, "C")?;
        let mut b = by_degree(&self.b, 0, "B")?;
        let mut n_p = Vec::new();
        let mut n_v = Vec::new();
        for nj in &self.bilinear {
            let mut parts = by_degree(nj, 1, "N")?;
            n_v.push(parts.pop().unwrap());
            n_p.push(parts.pop().unwrap());
        }
        let mass = k.pop().unwrap();
        let damping = k.pop().unwrap();
        let stiffness = k.pop().unwrap();
        let c_v = c.pop().unwrap();
        let c_p = c.pop().unwrap();
        Ok(SecondOrderParts { mass, damping, stiffness, b_u: b.pop().unwrap(), c_p, c_v, n_p, n_v })
    }
}

/// Factorization of `K(s, mu)`.
#[derive(Debug)]
pub struct ShiftedFactor {
    fact: Factorization,
}

impl ShiftedFactor {
    pub fn new(k: &AffineMatrixFn, s: Complex64, mu: &[f64]) -> Result<Self> {
        if k.rows() != k.cols() {
            return Err(Error::dim("shifted solve needs a square operator"));
        }
        let a = k.eval(s, mu)?;
        let fact = Factorization::new(&a).map_err(|_| Error::Singular { s, mu: mu.to_vec() })?;
        Ok(ShiftedFactor { fact })
    }

    pub fn solve(&self, rhs: &CMat) -> Result<CMat> {
        self.check(rhs)?;
        Ok(self.fact.solve(rhs))
    }

    pub fn solve_adjoint(&self, rhs: &CMat) -> Result<CMat> {
        self.check(rhs)?;
        Ok(self.fact.solve_adjoint(rhs))
    }

    fn check(&self, rhs: &CMat) -> Result<()> {
        if rhs.nrows() != self.fact.dim() {
            return Err(Error::dim(format!("right-hand side has {} rows, expected {}", rhs.nrows(), self.fact.dim())));
        }
        Ok(())
    }
}

type CacheKey = (u64, u64, Vec<u64>);

/// Factorizations of one operator at the points visited so far. Owned by a
/// single thread.
pub struct FactorCache<'a> {
    k: &'a AffineMatrixFn,
    map: RefCell<HashMap<CacheKey, Rc<ShiftedFactor>>>,
}

impl<'a> FactorCache<'a> {
    pub fn new(k: &'a AffineMatrixFn) -> Self {
        FactorCache { k, map: RefCell::new(HashMap::new()) }
    }

    pub fn get(&self, s: Complex64, mu: &[f64]) -> Result<Rc<ShiftedFactor>> {
        let key = (s.re.to_bits(), s.im.to_bits(), mu.iter().map(|x| x.to_bits()).collect());
        if let Some(f) = self.map.borrow().get(&key) {
            return Ok(f.clone());
        }
        let f = Rc::new(ShiftedFactor::new(self.k, s, mu)?);
        self.map.borrow_mut().insert(key, f.clone());
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.map.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Solves `K(s, mu) X = RHS`, or `K(s, mu)^H X = RHS` when `adjoint`.
pub fn solve_shifted(k: &AffineMatrixFn, s: Complex64, mu: &[f64], rhs: &CMat, adjoint: bool) -> Result<CMat> {
    let f = ShiftedFactor::new(k, s, mu)?;
    if adjoint {
        f.solve_adjoint(rhs)
    } else {
        f.solve(rhs)
    }
}

pub(crate) fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Leibniz recurrence with precomputed right-hand side derivatives.
///
/// Forward: `rhs[j] = d^j F`, returns `X_j = d^j (K^-1 F)`.
/// Adjoint: `rhs[j] = (d^j R)^H` for a row-shaped `R`, returns
/// `X_j = (d^j (R K^-1))^H`.
pub fn deriv_action_with(
    factor: &ShiftedFactor,
    k: &AffineMatrixFn,
    s: Complex64,
    mu: &[f64],
    rhs: &[CMat],
    adjoint: bool,
) -> Result<Vec<CMat>> {
    let mut xs: Vec<CMat> = Vec::with_capacity(rhs.len());
    for (j, r) in rhs.iter().enumerate() {
        let mut acc = r.clone();
        for i in 1..=j {
            let kx = if adjoint {
                k.apply_adjoint(s, mu, &xs[j - i], i, None)?
            } else {
                k.apply(s, mu, &xs[j - i], i, None)?
            };
            acc -= kx * Complex64::new(binom(j, i), 0.0);
        }
        xs.push(if adjoint { factor.solve_adjoint(&acc)? } else { factor.solve(&acc)? });
    }
    Ok(xs)
}

/// `[X_0 .. X_max]` with `X_j = d^j/ds^j (K^-1 F)(s, mu)`. With `adjoint`,
/// `F` is row-shaped (like `C`) and `X_j = (d^j/ds^j (F K^-1))^H`.
pub fn solve_deriv_action(
    k: &AffineMatrixFn,
    f: &AffineMatrixFn,
    s: Complex64,
    mu: &[f64],
    max_order: usize,
    adjoint: bool,
) -> Result<Vec<CMat>> {
    let factor = ShiftedFactor::new(k, s, mu)?;
    let rhs = (0..=max_order)
        .map(|j| {
            let d = f.eval_deriv(s, mu, j, None)?.to_dense();
            Ok(if adjoint { d.adjoint() } else { d })
        })
        .collect::<Result<Vec<_>>>()?;
    deriv_action_with(&factor, k, s, mu, &rhs, adjoint)
}
