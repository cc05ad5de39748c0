//! Transfer functions against independent dense evaluators.

use num_complex::Complex64;
use proptest::prelude::*;

mod common;

use common::{c, central_diff, eye, inv, kronecker_gk, rel};
use pbmor::bench::{gen_random_structured, RandomKind};
use pbmor::linalg::{CMat, ConstMatrix};
use pbmor::matfun::{AffineMatrixFn, StructuredSystem, Structure};
use pbmor::scalarfun::ScalarFn;
use pbmor::tf::{eval_gk, eval_gk_freq_deriv, eval_gk_param_grad, eval_gk_siso, TransferEvalRequest};

fn kind_of(i: u8) -> RandomKind {
    [RandomKind::Polynomial, RandomKind::Delay, RandomKind::Mixed][i as usize % 3]
}

fn point() -> impl Strategy<Value = Complex64> {
    (-0.5f64..0.5, -20.0f64..20.0).prop_map(|(re, im)| c(re.abs() * 0.2, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn propagation_matches_explicit_kronecker_products(
        seed in 0u64..10_000,
        n in 2usize..=20,
        m in 1usize..=3,
        p in 1usize..=3,
        kind in 0u8..3,
        points in prop::collection::vec(point(), 1..=3),
        mu in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let sys = gen_random_structured(seed, n, m, p, 2, kind_of(kind)).unwrap();
        let got = eval_gk(&sys, &TransferEvalRequest::new(points.clone(), mu.clone())).unwrap();
        let want = kronecker_gk(&sys, &points, &mu);
        prop_assert_eq!(got.shape(), (p, m.pow(points.len() as u32)));
        prop_assert!(rel(&got, &want) <= 1e-10, "rel {}", rel(&got, &want));
    }

    #[test]
    fn siso_path_matches_general_path(
        seed in 0u64..10_000,
        n in 2usize..=20,
        kind in 0u8..3,
        points in prop::collection::vec(point(), 1..=4),
        mu in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        let sys = gen_random_structured(seed, n, 1, 1, 2, kind_of(kind)).unwrap();
        let req = TransferEvalRequest::new(points, mu);
        let g = eval_gk(&sys, &req).unwrap()[(0, 0)];
        let g1 = eval_gk_siso(&sys, &req).unwrap();
        prop_assert!((g - g1).norm() <= 1e-12 * g.norm().max(1e-300), "{} vs {}", g, g1);
    }
}

/// `sE(mu) - A(mu)` with constant `N_j`, built from explicit matrices.
struct Descriptor {
    e: [CMat; 2],
    a: [CMat; 2],
    b: CMat,
    c: CMat,
    n: Vec<CMat>,
}

impl Descriptor {
    fn random(seed: u64, n: usize, m: usize, p: usize) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rnd = |r: usize, c: usize, scale: f64| CMat::from_fn(r, c, |_, _| c64(rng.gen_range(-scale..scale)));
        let mut a0 = rnd(n, n, 0.3);
        for i in 0..n {
            a0[(i, i)] -= c64(3.0);
        }
        let e0 = eye(n) + rnd(n, n, 0.05);
        Descriptor {
            e: [e0, rnd(n, n, 0.05)],
            a: [a0, rnd(n, n, 0.2)],
            b: rnd(n, m, 1.0),
            c: rnd(p, n, 1.0),
            n: (0..m).map(|_| rnd(n, n, 0.5)).collect(),
        }
    }

    fn system(&self) -> StructuredSystem {
        let d = 1;
        let cm = |m: &CMat| ConstMatrix::Dense(m.clone());
        let s = ScalarFn::s_pow(d, 1);
        let mu = ScalarFn::mu(d, 0);
        let k = AffineMatrixFn::new(
            self.e[0].nrows(),
            self.e[0].nrows(),
            d,
            vec![
                (s.clone(), cm(&self.e[0])),
                (s * mu.clone(), cm(&self.e[1])),
                (ScalarFn::constant(d, -1.0), cm(&self.a[0])),
                (mu.scale(-1.0), cm(&self.a[1])),
            ],
        )
        .unwrap();
        let b = AffineMatrixFn::constant(cm(&self.b), d);
        let cc = AffineMatrixFn::constant(cm(&self.c), d);
        let nn = self.n.iter().map(|x| AffineMatrixFn::constant(cm(x), d)).collect();
        StructuredSystem::new(cc, k, b, nn, Structure::FirstOrder).unwrap()
    }

    /// Regular transfer function evaluated by nested resolvent products,
    /// one multi-index at a time.
    fn gk(&self, points: &[Complex64], mu: f64) -> CMat {
        let m = self.b.ncols();
        let k = points.len();
        let res = |s: Complex64| inv((&self.e[0] + &self.e[1] * c64(mu)) * s - (&self.a[0] + &self.a[1] * c64(mu)));
        let mut out = CMat::zeros(self.c.nrows(), m.pow(k as u32));
        for col in 0..m.pow(k as u32) {
            // digits of col in base m, most significant first: (i_1, .., i_k)
            let digits: Vec<usize> = (0..k).rev().map(|e| (col / m.pow(e as u32)) % m).collect();
            let mut x = res(points[0]) * self.b.column(digits[k - 1]);
            for lvl in 1..k {
                x = res(points[lvl]) * (&self.n[digits[k - 1 - lvl]] * x);
            }
            out.set_column(col, &(&self.c * x));
        }
        out
    }
}

fn c64(x: f64) -> Complex64 {
    c(x, 0.0)
}

#[test]
fn descriptor_specialization_matches_direct_evaluation() {
    for seed in 0..12 {
        let (n, m, p) = (5 + seed as usize, 1 + seed as usize % 3, 1 + seed as usize % 2);
        let desc = Descriptor::random(seed, n, m, p);
        let sys = desc.system();
        for k in 1..=3 {
            let points: Vec<Complex64> = (0..k).map(|i| c(0.1 * i as f64, 1.5 - 0.7 * i as f64)).collect();
            let mu = 0.3 + 0.1 * seed as f64;
            let got = eval_gk(&sys, &TransferEvalRequest::new(points.clone(), vec![mu])).unwrap();
            let want = desc.gk(&points, mu);
            assert!(rel(&got, &want) <= 1e-10, "seed {seed} k {k}: {}", rel(&got, &want));
        }
    }
}

/// Derivatives by the trapezoidal Cauchy integral on a circle of radius
/// `r` in every differentiated argument.
fn cauchy_deriv(sys: &StructuredSystem, points: &[Complex64], orders: &[usize], mu: &[f64]) -> CMat {
    const NODES: usize = 24;
    let r = 0.05;
    let active: Vec<usize> = (0..points.len()).filter(|&i| orders[i] > 0).collect();
    let total = NODES.pow(active.len() as u32);
    let mut acc: Option<CMat> = None;
    for idx in 0..total {
        let mut pts = points.to_vec();
        let mut weight = c64(1.0);
        for (slot, &i) in active.iter().enumerate() {
            let node = (idx / NODES.pow(slot as u32)) % NODES;
            let theta = 2.0 * std::f64::consts::PI * node as f64 / NODES as f64;
            let e = Complex64::from_polar(1.0, theta);
            pts[i] += e * r;
            let fact: f64 = (1..=orders[i]).product::<usize>() as f64;
            weight *= Complex64::from_polar(1.0, -(orders[i] as f64) * theta) * fact / (NODES as f64 * r.powi(orders[i] as i32));
        }
        let g = eval_gk(sys, &TransferEvalRequest::new(pts, mu.to_vec())).unwrap() * weight;
        acc = Some(match acc {
            Some(a) => a + g,
            None => g,
        });
    }
    acc.unwrap()
}

#[test]
fn frequency_derivatives_match_contour_integrals() {
    let cases: &[&[usize]] = &[&[1], &[2], &[3], &[1, 0], &[0, 2], &[1, 1], &[0, 1, 1], &[2, 0, 0]];
    for (seed, orders) in cases.iter().enumerate() {
        for kind in [RandomKind::Polynomial, RandomKind::Delay, RandomKind::Mixed] {
            let sys = gen_random_structured(seed as u64 + 40, 12, 2, 2, 2, kind).unwrap();
            let points: Vec<Complex64> = (0..orders.len()).map(|i| c(0.0, 0.8 + 1.3 * i as f64)).collect();
            let mu = vec![0.7, -1.1];
            let req = TransferEvalRequest::new(points.clone(), mu.clone()).with_orders(orders.to_vec());
            let got = eval_gk_freq_deriv(&sys, &req).unwrap();
            let want = cauchy_deriv(&sys, &points, orders, &mu);
            assert!(rel(&got, &want) <= 1e-6, "{kind:?} {orders:?}: {}", rel(&got, &want));
        }
    }
}

#[test]
fn parameter_gradient_matches_central_differences() {
    for (seed, kind) in [RandomKind::Polynomial, RandomKind::Delay, RandomKind::Mixed].into_iter().enumerate() {
        let sys = gen_random_structured(seed as u64 + 7, 15, 2, 2, 2, kind).unwrap();
        for k in 1..=2 {
            let points: Vec<Complex64> = (0..k).map(|i| c(0.0, 2.0 - 3.0 * i as f64)).collect();
            let mu = vec![0.4, 1.2];
            let grads = eval_gk_param_grad(&sys, &TransferEvalRequest::new(points.clone(), mu.clone())).unwrap();
            for (i, g) in grads.iter().enumerate() {
                let at = |x: f64| {
                    let mut m = mu.clone();
                    m[i] += x;
                    eval_gk(&sys, &TransferEvalRequest::new(points.clone(), m)).unwrap()
                };
                let fd = central_diff(at, 1e-3);
                assert!(rel(g, &fd) <= 1e-6, "{kind:?} k {k} mu_{i}: {}", rel(g, &fd));
            }
        }
    }
}
