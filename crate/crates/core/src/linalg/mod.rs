//! Constant matrices (dense or sparse) and the factorizations used by the
//! shifted solves.

mod lu;
pub mod mmio;
mod sparse;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use lu::{BandedLu, DenseLu, Factorization, SingularMatrix};
pub use sparse::SparseMatrix;

/// Operators below this size are always handled densely.
pub const DENSE_CUTOFF: usize = 200;

pub type CMat = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
#[allow(dead_code)]
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub enum ConstMatrix {
    Dense(CMat),
    Sparse(SparseMatrix),
}

impl ConstMatrix {
    /// Sparse storage for large matrices, dense otherwise.
    pub fn from_triplets(rows: usize, cols: usize, trip: Vec<(usize, usize, Complex64)>) -> crate::Result<Self> {
        let s = SparseMatrix::from_triplets(rows, cols, trip)?;
        Ok(if rows.max(cols) >= DENSE_CUTOFF { ConstMatrix::Sparse(s) } else { ConstMatrix::Dense(s.to_dense()) })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        ConstMatrix::Dense(m.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        if n >= DENSE_CUTOFF {
            ConstMatrix::Sparse(SparseMatrix::identity(n))
        } else {
            ConstMatrix::Dense(CMat::identity(n, n))
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            ConstMatrix::Dense(d) => d.nrows(),
            ConstMatrix::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            ConstMatrix::Dense(d) => d.ncols(),
            ConstMatrix::Sparse(s) => s.cols(),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            ConstMatrix::Dense(d) => d.iter().all(|v| v.im == 0.0),
            ConstMatrix::Sparse(s) => s.is_real(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ConstMatrix::Dense(d) => d.iter().all(|v| *v == ZERO),
            ConstMatrix::Sparse(s) => s.nnz() == 0,
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            ConstMatrix::Dense(d) => d.clone(),
            ConstMatrix::Sparse(s) => s.to_dense(),
        }
    }

    /// Nonzero entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        match self {
            ConstMatrix::Dense(d) => {
                let mut t = Vec::new();
                for r in 0..d.nrows() {
                    for c in 0..d.ncols() {
                        if d[(r, c)] != ZERO {
                            t.push((r, c, d[(r, c)]));
                        }
                    }
                }
                t
            }
            ConstMatrix::Sparse(s) => s.triplets().collect(),
        }
    }

    pub fn mul_dense(&self, x: &CMat) -> CMat {
        match self {
            ConstMatrix::Dense(d) => d * x,
            ConstMatrix::Sparse(s) => s.mul_dense(x),
        }
    }

    pub fn adjoint_mul_dense(&self, x: &CMat) -> CMat {
        match self {
            ConstMatrix::Dense(d) => d.ad_mul(x),
            ConstMatrix::Sparse(s) => s.adjoint_mul_dense(x),
        }
    }

    /// `X * A`.
    pub fn left_mul_dense(&self, x: &CMat) -> CMat {
        match self {
            ConstMatrix::Dense(d) => x * d,
            ConstMatrix::Sparse(s) => s.left_mul_dense(x),
        }
    }

    /// `W^H A V`.
    pub fn project(&self, w: &CMat, v: &CMat) -> CMat {
        w.ad_mul(&self.mul_dense(v))
    }

    /// Sum of scaled matrices of a common shape. The result is sparse only
    /// when every part is sparse.
    pub fn linear_combination(rows: usize, cols: usize, parts: &[(Complex64, &ConstMatrix)]) -> ConstMatrix {
        if parts.iter().all(|(_, m)| matches!(m, ConstMatrix::Sparse(_))) && !parts.is_empty() {
            let sp: Vec<(Complex64, &SparseMatrix)> = parts
                .iter()
                .map(|(a, m)| match m {
                    ConstMatrix::Sparse(s) => (*a, s),
                    ConstMatrix::Dense(_) => unreachable!(),
                })
                .collect();
            return ConstMatrix::Sparse(SparseMatrix::linear_combination(rows, cols, &sp));
        }
        let mut acc = CMat::zeros(rows, cols);
        for (a, m) in parts {
            if *a == ZERO {
                continue;
            }
            match m {
                ConstMatrix::Dense(d) => acc.zip_apply(d, |x, y| *x += *a * y),
                ConstMatrix::Sparse(s) => {
                    for (r, c, v) in s.triplets() {
                        acc[(r, c)] += *a * v;
                    }
                }
            }
        }
        ConstMatrix::Dense(acc)
    }
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    m.clone().svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_stays_sparse_only_when_all_parts_are() {
        let s = ConstMatrix::Sparse(SparseMatrix::identity(3));
        let d = ConstMatrix::Dense(CMat::identity(3, 3));
        let two = Complex64::new(2.0, 0.0);
        let c = ConstMatrix::linear_combination(3, 3, &[(two, &s), (ONE, &s)]);
        assert!(matches!(c, ConstMatrix::Sparse(_)));
        assert_eq!(c.to_dense(), CMat::identity(3, 3) * Complex64::new(3.0, 0.0));
        let c = ConstMatrix::linear_combination(3, 3, &[(two, &s), (ONE, &d)]);
        assert!(matches!(c, ConstMatrix::Dense(_)));
        assert_eq!(c.to_dense(), CMat::identity(3, 3) * Complex64::new(3.0, 0.0));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::new(3.0, 4.0), ONE]));
        assert!((spectral_norm(&m) - 5.0).abs() < 1e-14);
    }
}
