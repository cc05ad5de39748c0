//! Deterministic benchmark generators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ConstMatrix;
use crate::matfun::{AffineMatrixFn, Structure, StructuredSystem};
use crate::scalarfun::ScalarFn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkId {
    HeatedRodDelay,
    MsdChain,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RandomKind {
    /// `s^2 M + s D + K(mu)`.
    #[default]
    Polynomial,
    /// `s I + A(mu) - mu e^{-s} A_d`.
    Delay,
    /// Second-order, delayed and trigonometric terms together.
    Mixed,
}

/// Rod defaults: `N = bilinear * diag(sin z)`, `B = 1`, `C = 1/n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RodParams {
    pub bilinear: f64,
    pub delay: f64,
}

impl Default for RodParams {
    fn default() -> Self {
        RodParams { bilinear: 0.2, delay: 1.0 }
    }
}

/// Chain defaults: `M = mass I`, `K = tridiag(-k_off, k_diag, -k_off)`,
/// `D = alpha M + beta K`, bilinear subdiagonal couplings of strength
/// `coupling`. `N_{p,1}` carries `-coupling` and `N_{p,2}` carries
/// `+coupling`, so inputs near `+200` and `-200` both soften the chain
/// without making it unstable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MsdParams {
    pub mass: f64,
    pub k_diag: f64,
    pub k_off: f64,
    pub alpha: f64,
    pub beta: f64,
    pub coupling: f64,
}

impl Default for MsdParams {
    fn default() -> Self {
        MsdParams { mass: 4.0, k_diag: 4.0, k_off: 2.0, alpha: 0.05, beta: 0.1, coupling: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub id: BenchmarkId,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rod: RodParams,
    #[serde(default)]
    pub msd: MsdParams,
    #[serde(default)]
    pub random: RandomParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomParams {
    pub m: usize,
    pub p: usize,
    pub d: usize,
    pub kind: RandomKind,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { m: 2, p: 2, d: 2, kind: RandomKind::Polynomial }
    }
}

impl BenchmarkConfig {
    pub fn new(id: BenchmarkId, n: usize) -> Self {
        BenchmarkConfig {
            id,
            n,
            seed: 0,
            rod: RodParams::default(),
            msd: MsdParams::default(),
            random: RandomParams::default(),
        }
    }

    pub fn generate(&self) -> Result<StructuredSystem> {
        match self.id {
            BenchmarkId::HeatedRodDelay => gen_heated_rod_delay_with(self.n, &self.rod),
            BenchmarkId::MsdChain => gen_msd_chain_with(self.n, &self.msd),
            BenchmarkId::Random => {
                let r = &self.random;
                gen_random_structured(self.seed, self.n, r.m, r.p, r.d, r.kind)
            }
        }
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn f(src: &str, d: usize) -> ScalarFn {
    ScalarFn::parse(src, d).expect("built-in coefficient")
}

fn mat(n: usize, m: usize, trip: Vec<(usize, usize, f64)>) -> ConstMatrix {
    ConstMatrix::from_triplets(n, m, trip.into_iter().map(|(r, c, v)| (r, c, re(v))).collect()).expect("in range")
}

/// Rod grid `z_i = i pi / (n + 1)`, `i = 1..n`.
pub fn rod_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 * PI / (n + 1) as f64).collect()
}

/// Second-difference Laplacian on the rod grid with Dirichlet ends.
pub fn rod_laplacian(n: usize) -> ConstMatrix {
    let h = PI / (n + 1) as f64;
    let w = 1.0 / (h * h);
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, -2.0 * w));
        if i + 1 < n {
            t.push((i, i + 1, w));
            t.push((i + 1, i, w));
        }
    }
    mat(n, n, t)
}

pub fn rod_delay_matrix(n: usize) -> ConstMatrix {
    mat(n, n, rod_grid(n).into_iter().enumerate().map(|(i, z)| (i, i, z.sin())).collect())
}

pub fn gen_heated_rod_delay(n: usize) -> Result<StructuredSystem> {
    gen_heated_rod_delay_with(n, &RodParams::default())
}

/// `K(s, mu) = s I - A_0 + mu A_d - mu e^{-tau s} A_d`, `B = 1`,
/// `C = 1^T / n`, `N = bilinear * A_d`.
pub fn gen_heated_rod_delay_with(n: usize, prm: &RodParams) -> Result<StructuredSystem> {
    if n < 3 {
        return Err(Error::InvalidSpec(format!("rod needs n >= 3, got {n}")));
    }
    if prm.delay.is_nan() || prm.delay <= 0.0 {
        return Err(Error::InvalidSpec("rod delay must be positive".into()));
    }
    let d = 1;
    let a0 = rod_laplacian(n);
    let ad = rod_delay_matrix(n);
    let delayed = ScalarFn::mu(d, 0) * ScalarFn::exp(d, -prm.delay);
    let k = AffineMatrixFn::new(
        n,
        n,
        d,
        vec![
            (ScalarFn::s_pow(d, 1), ConstMatrix::identity(n)),
            (f("-1", d), a0),
            (ScalarFn::mu(d, 0), ad.clone()),
            (-delayed, ad.clone()),
        ],
    )?;
    let b = AffineMatrixFn::constant(mat(n, 1, (0..n).map(|i| (i, 0, 1.0)).collect()), d);
    let c = AffineMatrixFn::constant(mat(1, n, (0..n).map(|i| (0, i, 1.0 / n as f64)).collect()), d);
    let nb = AffineMatrixFn::constant(
        mat(n, n, rod_grid(n).into_iter().enumerate().map(|(i, z)| (i, i, prm.bilinear * z.sin())).collect()),
        d,
    );
    StructuredSystem::new(c, k, b, vec![nb], Structure::TimeDelay)
}

pub fn gen_msd_chain(n: usize) -> Result<StructuredSystem> {
    gen_msd_chain_with(n, &MsdParams::default())
}

/// `K(s) = s^2 M + s D + K`, `B = [e_1, e_n]`, `C = [e_2, e_{n-3}]^T`,
/// `N_j = mu_j N_{p,j}` with `N_{p,1}`, `N_{p,2}` subdiagonal couplings of
/// opposite sign on the first and second half of the chain.
pub fn gen_msd_chain_with(n: usize, prm: &MsdParams) -> Result<StructuredSystem> {
    if n < 5 {
        return Err(Error::InvalidSpec(format!("chain needs n >= 5, got {n}")));
    }
    let d = 2;
    let mass = mat(n, n, (0..n).map(|i| (i, i, prm.mass)).collect());
    let tri = |diag: f64, off: f64| {
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            t.push((i, i, diag));
            if i + 1 < n {
                t.push((i, i + 1, off));
                t.push((i + 1, i, off));
            }
        }
        t
    };
    let stiff = mat(n, n, tri(prm.k_diag, -prm.k_off));
    let damp = mat(n, n, tri(prm.alpha * prm.mass + prm.beta * prm.k_diag, -prm.beta * prm.k_off));
    let k = AffineMatrixFn::new(
        n,
        n,
        d,
        vec![(ScalarFn::s_pow(d, 2), mass), (ScalarFn::s_pow(d, 1), damp), (ScalarFn::one(d), stiff)],
    )?;
    let b = AffineMatrixFn::constant(mat(n, 2, vec![(0, 0, 1.0), (n - 1, 1, 1.0)]), d);
    let c = AffineMatrixFn::constant(mat(2, n, vec![(0, 1, 1.0), (1, n - 4, 1.0)]), d);
    let half = n / 2;
    let sub = |lo: usize, hi: usize, v: f64| mat(n, n, (lo..hi.min(n - 1)).map(|i| (i + 1, i, v)).collect());
    let n1 = AffineMatrixFn::new(n, n, d, vec![(ScalarFn::mu(d, 0), sub(0, half - 1, -prm.coupling))])?;
    let n2 = AffineMatrixFn::new(n, n, d, vec![(ScalarFn::mu(d, 1), sub(half, n - 1, prm.coupling))])?;
    StructuredSystem::new(c, k, b, vec![n1, n2], Structure::SecondOrder)
}

fn random_offdiag(rng: &mut ChaCha8Rng, n: usize, row_budget: f64, per_row: usize) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::new();
    for r in 0..n {
        let cols: Vec<usize> = (0..per_row).map(|_| rng.gen_range(0..n)).filter(|&c| c != r).collect();
        if cols.is_empty() {
            continue;
        }
        let share = row_budget / cols.len() as f64;
        for c in cols {
            t.push((r, c, rng.gen_range(-share..share)));
        }
    }
    t
}

fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> ConstMatrix {
    let mut t = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            t.push((r, c, rng.gen_range(-scale..scale)));
        }
    }
    mat(rows, cols, t)
}

fn random_diag(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> ConstMatrix {
    mat(n, n, (0..n).map(|i| (i, i, rng.gen_range(lo..hi))).collect())
}

/// Random system whose `K` is diagonally dominant with margin at least 0.5
/// on the imaginary axis for `|mu_i| <= 2`.
///
/// Parameter-dependent pieces only ever touch off-diagonal entries, and
/// every off-diagonal budget is bounded per row, so the margin argument is
/// per-row and independent of `mu` within the stated range.
pub fn gen_random_structured(
    seed: u64,
    n: usize,
    m: usize,
    p: usize,
    d: usize,
    kind: RandomKind,
) -> Result<StructuredSystem> {
    if n == 0 || m == 0 || p == 0 {
        return Err(Error::InvalidSpec("random systems need positive n, m, p".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_row = 3.min(n.saturating_sub(1)).max(1);
    let mu = |i: usize| ScalarFn::mu(d, i % d.max(1));
    let one = ScalarFn::one(d);
    let offdiag = |rng: &mut ChaCha8Rng, budget: f64| mat(n, n, random_offdiag(rng, n, budget, per_row));

    let mut k_terms: Vec<(ScalarFn, ConstMatrix)> = Vec::new();
    let structure = match kind {
        RandomKind::Polynomial => {
            // |k - w^2 m + i w c| >= 1 with k in [1,2], m <= 0.1, c >= 2
            k_terms.push((ScalarFn::s_pow(d, 2), random_diag(&mut rng, n, 0.05, 0.1)));
            k_terms.push((ScalarFn::s_pow(d, 1), random_diag(&mut rng, n, 2.0, 3.0)));
            let k0 = ConstMatrix::linear_combination(
                n,
                n,
                &[(re(1.0), &random_diag(&mut rng, n, 1.0, 2.0)), (re(1.0), &offdiag(&mut rng, 0.3))],
            );
            k_terms.push((one.clone(), k0));
            Structure::SecondOrder
        }
        RandomKind::Delay => {
            // |i w + a - mu e^{-iw} a_d| >= 2 - 2 * 0.35
            k_terms.push((ScalarFn::s_pow(d, 1), ConstMatrix::identity(n)));
            let a0 = ConstMatrix::linear_combination(
                n,
                n,
                &[(re(1.0), &random_diag(&mut rng, n, 2.0, 3.0)), (re(1.0), &offdiag(&mut rng, 0.3))],
            );
            k_terms.push((one.clone(), a0));
            let delayed = if d > 0 { ScalarFn::exp(d, -1.0) * mu(0) } else { ScalarFn::exp(d, -1.0) };
            k_terms.push((-delayed, random_diag(&mut rng, n, 0.0, 0.35)));
            Structure::TimeDelay
        }
        RandomKind::Mixed => {
            k_terms.push((ScalarFn::s_pow(d, 2), random_diag(&mut rng, n, 0.05, 0.1)));
            k_terms.push((ScalarFn::s_pow(d, 1), random_diag(&mut rng, n, 2.0, 3.0)));
            k_terms.push((one.clone(), random_diag(&mut rng, n, 1.5, 2.5)));
            k_terms.push((one.clone(), offdiag(&mut rng, 0.2)));
            let delayed = if d > 0 { ScalarFn::exp(d, -0.5) * mu(0) } else { ScalarFn::exp(d, -0.5) };
            k_terms.push((delayed, random_diag(&mut rng, n, 0.0, 0.25)));
            Structure::Custom
        }
    };
    if d > 0 {
        // |mu| <= 2 and |sin|, |cos| <= 1 keep these within 0.1 per row.
        k_terms.push((mu(0).scale(0.5), offdiag(&mut rng, 0.1)));
        k_terms.push((ScalarFn::cos_mu(d, 1.0, 1 % d), offdiag(&mut rng, 0.1)));
    }
    let k = AffineMatrixFn::new(n, n, d, k_terms)?;

    let mut b_terms = vec![(one.clone(), random_dense(&mut rng, n, m, 1.0))];
    let mut c_terms = vec![(one.clone(), random_dense(&mut rng, p, n, 1.0))];
    if d > 0 {
        b_terms.push((mu(1), random_dense(&mut rng, n, m, 0.3)));
        c_terms.push((ScalarFn::sin_mu(d, 1.0, 0), random_dense(&mut rng, p, n, 0.3)));
    }
    if kind == RandomKind::Mixed {
        b_terms.push((ScalarFn::exp(d, -0.25), random_dense(&mut rng, n, m, 0.2)));
        c_terms.push((ScalarFn::s_pow(d, 1).scale(0.1), random_dense(&mut rng, p, n, 0.2)));
    }
    let b = AffineMatrixFn::new(n, m, d, b_terms)?;
    let c = AffineMatrixFn::new(p, n, d, c_terms)?;

    let mut bilinear = Vec::with_capacity(m);
    for j in 0..m {
        let mut terms = vec![(one.clone(), random_dense(&mut rng, n, n, 0.5 / n as f64 * 4.0))];
        if d > 0 {
            terms.push((mu(j), random_dense(&mut rng, n, n, 0.5 / n as f64 * 2.0)));
        }
        if kind != RandomKind::Delay {
            terms.push((ScalarFn::s_pow(d, 1), random_dense(&mut rng, n, n, 0.1 / n as f64)));
        }
        bilinear.push(AffineMatrixFn::new(n, n, d, terms)?);
    }
    StructuredSystem::new(c, k, b, bilinear, structure)
}
