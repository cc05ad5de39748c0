//! Dense reference evaluators shared by the integration tests.
#![allow(dead_code, clippy::assign_op_pattern)]

use num_complex::Complex64;

use pbmor::linalg::CMat;
use pbmor::matfun::{AffineMatrixFn, StructuredSystem};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rel(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn dense(f: &AffineMatrixFn, s: Complex64, mu: &[f64]) -> CMat {
    f.eval(s, mu).unwrap().to_dense()
}

pub fn inv(k: CMat) -> CMat {
    k.try_inverse().expect("K(s, mu) is invertible at test points")
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `G_k` with every Kronecker product written out, `points = (s_1 .. s_k)`.
pub fn kronecker_gk(sys: &StructuredSystem, points: &[Complex64], mu: &[f64]) -> CMat {
    let k = points.len();
    let m = sys.m;
    let s = |i: usize| points[i - 1];
    let n_row = |z: Complex64| {
        let mut out = CMat::zeros(sys.n, sys.n * m);
        for (j, nj) in sys.bilinear.iter().enumerate() {
            out.view_mut((0, j * sys.n), (sys.n, sys.n)).copy_from(&dense(nj, z, mu));
        }
        out
    };
    let mut acc = dense(&sys.c, s(k), mu) * inv(dense(&sys.k, s(k), mu));
    for j in 1..k {
        let z = s(k - j);
        acc = acc * eye(m.pow(j as u32 - 1)).kronecker(&n_row(z));
        acc = acc * eye(m.pow(j as u32)).kronecker(&inv(dense(&sys.k, z, mu)));
    }
    acc * eye(m.pow(k as u32 - 1)).kronecker(&dense(&sys.b, s(1), mu))
}

/// Sixth-order central difference of `f` at zero.
pub fn central_diff(f: impl Fn(f64) -> CMat, h: f64) -> CMat {
    const W: [(f64, f64); 3] = [(1.0, 45.0 / 60.0), (2.0, -9.0 / 60.0), (3.0, 1.0 / 60.0)];
    let mut acc = (f(h) - f(-h)) * c(W[0].1 / h, 0.0);
    for (j, w) in &W[1..] {
        acc += (f(j * h) - f(-j * h)) * c(w / h, 0.0);
    }
    acc
}
