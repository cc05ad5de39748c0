use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    /// Builds from unordered triplets; duplicates are summed in input order,
    /// exact zeros are kept out of the pattern.
    pub fn from_triplets(rows: usize, cols: usize, mut trip: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = trip.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::dim(format!("entry ({r}, {c}) outside {rows}x{cols}")));
        }
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = SparseMatrix { rows, cols, indptr, indices, values };
        m.prune();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let trip = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), diag.len(), trip).unwrap()
    }

    fn prune(&mut self) {
        let zero = Complex64::new(0.0, 0.0);
        if self.values.iter().all(|&v| v != zero) {
            return;
        }
        let mut indptr = vec![0; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != zero {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (r, c, _) in self.triplets() {
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        (kl, ku)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, trip).unwrap()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= a;
        }
        m.prune();
        m
    }

    /// `A * X`.
    pub fn mul_dense(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(self.cols, x.nrows());
        let mut y = DMatrix::zeros(self.rows, x.ncols());
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let mut yc = y.column_mut(j);
            for r in 0..self.rows {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.indptr[r]..self.indptr[r + 1] {
                    acc += self.values[k] * xc[self.indices[k]];
                }
                yc[r] = acc;
            }
        }
        y
    }

    /// `A^H * X`.
    pub fn adjoint_mul_dense(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(self.rows, x.nrows());
        let mut y = DMatrix::zeros(self.cols, x.ncols());
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let mut yc = y.column_mut(j);
            for r in 0..self.rows {
                let xr = xc[r];
                for k in self.indptr[r]..self.indptr[r + 1] {
                    yc[self.indices[k]] += self.values[k].conj() * xr;
                }
            }
        }
        y
    }

    /// `X * A` for a dense left factor.
    pub fn left_mul_dense(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(x.ncols(), self.rows);
        let mut y = DMatrix::zeros(x.nrows(), self.cols);
        for (r, c, v) in self.triplets() {
            for i in 0..x.nrows() {
                y[(i, c)] += x[(i, r)] * v;
            }
        }
        y
    }

    /// Sum of scaled matrices sharing a shape.
    pub fn linear_combination(rows: usize, cols: usize, parts: &[(Complex64, &SparseMatrix)]) -> Self {
        let trip = parts
            .iter()
            .flat_map(|&(a, m)| m.triplets().map(move |(r, c, v)| (r, c, a * v)))
            .collect();
        Self::from_triplets(rows, cols, trip).unwrap()
    }
}
