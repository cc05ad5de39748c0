use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Orthonormal basis of the span of all block columns.
///
/// Columns are normalized, then orthonormalized by a Householder QR followed
/// by an SVD of the triangular factor; directions whose singular value falls
/// below `tol` times the largest are dropped. With `realify`, every column
/// is replaced by its real and imaginary parts first and the result is real.
/// Each output column is scaled so that its largest-modulus entry is real
/// and positive.
pub fn assemble_basis(blocks: &[CMat], realify: bool, tol: f64) -> Result<CMat> {
    let Some(first) = blocks.first() else {
        return Err(Error::InvalidSpec("no basis blocks".into()));
    };
    let n = first.nrows();
    if let Some(b) = blocks.iter().find(|b| b.nrows() != n) {
        return Err(Error::dim(format!("basis block has {} rows, expected {n}", b.nrows())));
    }
    let cols: Vec<_> = blocks.iter().flat_map(|b| b.column_iter().map(|c| c.into_owned())).collect();
    if realify {
        let mut real: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(2 * cols.len());
        for c in &cols {
            real.push(c.map(|z| z.re));
            real.push(c.map(|z| z.im));
        }
        let q = orthonormalize(n, real, tol);
        Ok(q.map(|x| Complex64::new(x, 0.0)))
    } else {
        Ok(orthonormalize(n, cols, tol))
    }
}

fn orthonormalize<T>(n: usize, cols: Vec<nalgebra::DVector<T>>, tol: f64) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let cols: Vec<_> = cols
        .into_iter()
        .filter_map(|c| {
            let nrm = c.norm();
            (nrm > 0.0 && nrm.is_finite()).then(|| c.unscale(nrm))
        })
        .collect();
    if cols.is_empty() || n == 0 {
        return DMatrix::zeros(n, 0);
    }
    let a = DMatrix::from_columns(&cols);
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let svd = r.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    // nalgebra returns singular values unsorted; order them.
    let mut idx: Vec<usize> = (0..sv.len()).filter(|&i| smax > 0.0 && sv[i] >= tol * smax).collect();
    idx.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));
    let mut basis = DMatrix::zeros(n, idx.len());
    for (out, &i) in idx.iter().enumerate() {
        let mut col = &q * u.column(i);
        fix_phase(&mut col);
        basis.set_column(out, &col);
    }
    basis
}

fn fix_phase<T: ComplexField<RealField = f64> + Copy>(col: &mut nalgebra::DVector<T>) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (i, v) in col.iter().enumerate() {
        let m = v.modulus();
        if m > best_mod * (1.0 + 1e-12) {
            best = i;
            best_mod = m;
        }
    }
    if best_mod > 0.0 {
        let phase = col[best].signum().conjugate();
        col.apply(|x| *x *= phase);
    }
}

/// Extends the lower-rank basis with the directions of the other basis that
/// are least represented in it, until both have the same number of
/// columns. Returns the bases and the number of added columns.
pub fn equalize_ranks(v: CMat, w: CMat) -> (CMat, CMat, usize) {
    if v.ncols() == w.ncols() {
        return (v, w, 0);
    }
    let (small, large, swapped) = if v.ncols() < w.ncols() { (v, w, false) } else { (w, v, true) };
    let need = large.ncols() - small.ncols();
    let mut basis: Vec<_> = small.column_iter().map(|c| c.into_owned()).collect();
    let mut cand: Vec<_> = large.column_iter().map(|c| c.into_owned()).collect();
    let mut added = 0;
    while added < need {
        let residual = |c: &nalgebra::DVector<Complex64>, basis: &[nalgebra::DVector<Complex64>]| {
            let mut r = c.clone();
            for _ in 0..2 {
                for b in basis {
                    let h = b.dotc(&r);
                    r -= b * h;
                }
            }
            r
        };
        let (best, res) = cand
            .iter()
            .enumerate()
            .map(|(i, c)| (i, residual(c, &basis)))
            .max_by(|(i, a), (j, b)| a.norm().total_cmp(&b.norm()).then(j.cmp(i)))
            .expect("candidates remain while ranks differ");
        let nrm = res.norm();
        if nrm <= 1e-14 {
            break;
        }
        let mut col = res.unscale(nrm);
        fix_phase(&mut col);
        basis.push(col);
        cand.swap_remove(best);
        added += 1;
    }
    let n = large.nrows();
    let small = if basis.is_empty() { CMat::zeros(n, 0) } else { CMat::from_columns(&basis) };
    if swapped {
        (large, small, added)
    } else {
        (small, large, added)
    }
}
