use std::collections::HashSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Chain, InterpolationSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    /// `d^(l_1..l_{q-1}, j) G_q(sigma_1..sigma_q)`.
    VSide,
    /// `d^(i, nu..) G_e(vs_{theta-e+1}..vs_theta)`.
    WSide,
    /// `G_{q+e}(sigma_1..sigma_q, vs_{theta-e+1}..vs_theta)` and derivatives.
    Mixed,
    /// `dG_q/dmu_i(sigma_1..sigma_q)`.
    ParamGradient,
}

impl ConditionKind {
    pub fn label(self) -> &'static str {
        match self {
            ConditionKind::VSide => "v-side",
            ConditionKind::WSide => "w-side",
            ConditionKind::Mixed => "mixed",
            ConditionKind::ParamGradient => "param-gradient",
        }
    }
}

/// One interpolation identity between a full and a reduced model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub kind: ConditionKind,
    pub points: Vec<Complex64>,
    pub orders: Vec<usize>,
    pub mu: Vec<f64>,
    /// Set for parameter-gradient conditions only.
    pub mu_index: Option<usize>,
}

impl Condition {
    pub fn level(&self) -> usize {
        self.points.len()
    }

    pub fn total_order(&self) -> usize {
        self.orders.iter().sum()
    }
}

type Key = (ConditionKind, Vec<(u64, u64)>, Vec<usize>, Vec<u64>, Option<usize>);

struct Collector {
    seen: HashSet<Key>,
    out: Vec<Condition>,
}

impl Collector {
    fn push(&mut self, kind: ConditionKind, points: Vec<Complex64>, orders: Vec<usize>, mu: &[f64], mu_index: Option<usize>) {
        let key = (
            kind,
            points.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect(),
            orders.clone(),
            mu.iter().map(|x| x.to_bits()).collect(),
            mu_index,
        );
        if self.seen.insert(key) {
            let id = format!("{}-{}", kind.label(), self.out.iter().filter(|c| c.kind == kind).count());
            self.out.push(Condition { id, kind, points, orders, mu: mu.to_vec(), mu_index });
        }
    }
}

fn v_prefixes(c: &Chain) -> Vec<(Vec<Complex64>, Vec<usize>)> {
    let mut out = Vec::new();
    for q in 1..=c.len() {
        for j in 0..=c.orders[q - 1] {
            let mut orders = c.orders[..q - 1].to_vec();
            orders.push(j);
            out.push((c.points[..q].to_vec(), orders));
        }
    }
    out
}

fn w_suffixes(c: &Chain) -> Vec<(Vec<Complex64>, Vec<usize>)> {
    let theta = c.len();
    let mut out = Vec::new();
    for e in 1..=theta {
        let t = theta - e;
        for i in 0..=c.orders[t] {
            let mut orders = vec![i];
            orders.extend_from_slice(&c.orders[t + 1..]);
            out.push((c.points[t..].to_vec(), orders));
        }
    }
    out
}

fn plain_prefix(c: &Chain, tuple: &[Complex64]) -> bool {
    let j = tuple.len();
    c.len() >= j && &c.points[..j] == tuple && c.orders[..j - 1].iter().all(|&o| o == 0)
}

fn plain_suffix(c: &Chain, tuple: &[Complex64]) -> bool {
    let (n, e) = (c.len(), tuple.len());
    n >= e && &c.points[n - e..] == tuple && c.orders[n - e + 1..].iter().all(|&o| o == 0)
}

/// Every condition the spec enforces, in a deterministic order with
/// duplicates removed. One-sided modes only enforce their own side.
pub fn enumerate_conditions(spec: &InterpolationSpec, d: usize) -> Vec<Condition> {
    let mut col = Collector { seen: HashSet::new(), out: Vec::new() };
    let side = spec.sidedness;
    for mu in &spec.mu_points {
        if side.uses_v_chains() {
            for c in &spec.v_chains {
                for (p, o) in v_prefixes(c) {
                    col.push(ConditionKind::VSide, p, o, mu, None);
                }
            }
        }
        if side.uses_w_chains() {
            for c in &spec.w_chains {
                for (p, o) in w_suffixes(c) {
                    col.push(ConditionKind::WSide, p, o, mu, None);
                }
            }
        }
        if side.is_two_sided() {
            for vc in &spec.v_chains {
                for wc in &spec.w_chains {
                    for (vp, vo) in v_prefixes(vc) {
                        for (wp, wo) in w_suffixes(wc) {
                            let mut p = vp.clone();
                            p.extend_from_slice(&wp);
                            let mut o = vo.clone();
                            o.extend_from_slice(&wo);
                            col.push(ConditionKind::Mixed, p, o, mu, None);
                        }
                    }
                }
            }
            // The gradient identity for G_q(sigma_1..sigma_q) needs the
            // underived vectors of every prefix in V and of every suffix in
            // W. Hermite chains only carry those while the orders at
            // earlier (V) or later (W) points are zero.
            for vc in &spec.v_chains {
                for q in 1..=vc.len() {
                    let tuple = &vc.points[..q];
                    let in_v = (1..=q).all(|j| spec.v_chains.iter().any(|c| plain_prefix(c, &tuple[..j])));
                    let in_w = (0..q).all(|t| spec.w_chains.iter().any(|c| plain_suffix(c, &tuple[t..])));
                    if in_v && in_w {
                        for i in 0..d {
                            col.push(ConditionKind::ParamGradient, tuple.to_vec(), vec![0; q], mu, Some(i));
                        }
                    }
                }
            }
        }
    }
    col.out
}
