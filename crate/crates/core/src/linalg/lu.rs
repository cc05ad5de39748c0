//! LU factorizations with partial pivoting: a dense variant and a banded
//! variant for the tridiagonal-like operators of the benchmarks. Both
//! support solves with the matrix and with its conjugate transpose.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ConstMatrix, SparseMatrix, DENSE_CUTOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix;

fn pivot_floor(n: usize, max_abs: f64) -> f64 {
    (n.max(1) as f64) * f64::EPSILON * max_abs
}

/// `P A = L U` with full row interchanges.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DMatrix<Complex64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(mut a: DMatrix<Complex64>) -> Result<Self, SingularMatrix> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU of a non-square matrix");
        let max_abs = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let floor = pivot_floor(n, max_abs);
        let mut perm = vec![0; n];
        for k in 0..n {
            let (mut p, mut best) = (k, -1.0);
            for i in k..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= floor || best == 0.0 {
                return Err(SingularMatrix);
            }
            perm[k] = p;
            if p != k {
                a.swap_rows(k, p);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                a[(i, k)] /= pivot;
            }
            for j in k + 1..n {
                let akj = a[(k, j)];
                if akj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in k + 1..n {
                    let lik = a[(i, k)];
                    a[(i, j)] -= lik * akj;
                }
            }
        }
        Ok(DenseLu { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn solve(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut x = b.clone();
        for (k, &p) in self.perm.iter().enumerate() {
            if p != k {
                x.swap_rows(k, p);
            }
        }
        for mut col in x.column_iter_mut() {
            for k in 0..n {
                let xk = col[k];
                if xk == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in k + 1..n {
                    col[i] -= self.lu[(i, k)] * xk;
                }
            }
            for k in (0..n).rev() {
                col[k] /= self.lu[(k, k)];
                let xk = col[k];
                for i in 0..k {
                    col[i] -= self.lu[(i, k)] * xk;
                }
            }
        }
        x
    }

    pub fn solve_adjoint(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            // U^H y = b
            for i in 0..n {
                let mut acc = col[i];
                for j in 0..i {
                    acc -= self.lu[(j, i)].conj() * col[j];
                }
                col[i] = acc / self.lu[(i, i)].conj();
            }
            // L^H z = y
            for i in (0..n).rev() {
                let mut acc = col[i];
                for j in i + 1..n {
                    acc -= self.lu[(j, i)].conj() * col[j];
                }
                col[i] = acc;
            }
        }
        for (k, &p) in self.perm.iter().enumerate().rev() {
            if p != k {
                x.swap_rows(k, p);
            }
        }
        x
    }
}

/// Banded LU in the style of LAPACK `gbtrf`: row interchanges are applied
/// stepwise and the upper factor gains `kl` extra superdiagonals.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<Complex64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn new(a: &SparseMatrix) -> Result<Self, SingularMatrix> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "LU of a non-square matrix");
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu { n, kl, ku, width, band: vec![Complex64::new(0.0, 0.0); n * width], piv: vec![0; n] };
        let mut max_abs: f64 = 0.0;
        for (r, c, v) in a.triplets() {
            let i = lu.idx(r, c);
            lu.band[i] = v;
            max_abs = max_abs.max(v.norm());
        }
        let floor = pivot_floor(n, max_abs);
        let uw = ku + kl;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let (mut p, mut best) = (k, -1.0);
            for i in k..=last {
                let v = lu.band[lu.idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= floor || best == 0.0 {
                return Err(SingularMatrix);
            }
            lu.piv[k] = p;
            let cend = (k + uw).min(n - 1);
            if p != k {
                for c in k..=cend {
                    let (a, b) = (lu.idx(k, c), lu.idx(p, c));
                    lu.band.swap(a, b);
                }
            }
            let pivot = lu.band[lu.idx(k, k)];
            for i in k + 1..=last {
                let ik = lu.idx(i, k);
                let l = lu.band[ik] / pivot;
                lu.band[ik] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in k + 1..=cend {
                    let kc = lu.band[lu.idx(k, c)];
                    let ic = lu.idx(i, c);
                    lu.band[ic] -= l * kc;
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let (n, kl, uw) = (self.n, self.kl, self.kl + self.ku);
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            for k in 0..n {
                let p = self.piv[k];
                if p != k {
                    col.swap_rows(k, p);
                }
                let xk = col[k];
                if xk == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in k + 1..=(k + kl).min(n - 1) {
                    col[i] -= self.band[self.idx(i, k)] * xk;
                }
            }
            for k in (0..n).rev() {
                let mut acc = col[k];
                for c in k + 1..=(k + uw).min(n - 1) {
                    acc -= self.band[self.idx(k, c)] * col[c];
                }
                col[k] = acc / self.band[self.idx(k, k)];
            }
        }
        x
    }

    pub fn solve_adjoint(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let (n, kl, uw) = (self.n, self.kl, self.kl + self.ku);
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            for i in 0..n {
                let mut acc = col[i];
                for j in i.saturating_sub(uw)..i {
                    acc -= self.band[self.idx(j, i)].conj() * col[j];
                }
                col[i] = acc / self.band[self.idx(i, i)].conj();
            }
            for k in (0..n).rev() {
                let mut acc = col[k];
                for i in k + 1..=(k + kl).min(n - 1) {
                    acc -= self.band[self.idx(i, k)].conj() * col[i];
                }
                col[k] = acc;
                let p = self.piv[k];
                if p != k {
                    col.swap_rows(k, p);
                }
            }
        }
        x
    }
}

#[derive(Debug, Clone)]
pub enum Factorization {
    Dense(DenseLu),
    Banded(BandedLu),
}

impl Factorization {
    /// Picks the banded path for sparse operators of size at least
    /// [`DENSE_CUTOFF`] whose band is narrow; everything else is dense.
    pub fn new(a: &ConstMatrix) -> Result<Self, SingularMatrix> {
        match a {
            ConstMatrix::Sparse(s) if s.rows() >= DENSE_CUTOFF => {
                let (kl, ku) = s.bandwidth();
                if 8 * (2 * kl + ku + 1) <= s.rows() {
                    return BandedLu::new(s).map(Factorization::Banded);
                }
                DenseLu::new(s.to_dense()).map(Factorization::Dense)
            }
            ConstMatrix::Sparse(s) => DenseLu::new(s.to_dense()).map(Factorization::Dense),
            ConstMatrix::Dense(d) => DenseLu::new(d.clone()).map(Factorization::Dense),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factorization::Dense(f) => f.dim(),
            Factorization::Banded(f) => f.dim(),
        }
    }

    pub fn solve(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        match self {
            Factorization::Dense(f) => f.solve(b),
            Factorization::Banded(f) => f.solve(b),
        }
    }

    pub fn solve_adjoint(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        match self {
            Factorization::Dense(f) => f.solve_adjoint(b),
            Factorization::Banded(f) => f.solve_adjoint(b),
        }
    }
}
