//! Scalar coefficient functions `h(s, mu)` of the affine decompositions.
//!
//! A [`ScalarFn`] is a finite sum of monomials. Each monomial is a complex
//! constant times a product of atoms drawn from a fixed set: `s^q`,
//! `exp(a*s)`, `mu[i]^q`, `sin(c*mu[i])` and `cos(c*mu[i])`. The set is
//! closed under differentiation in `s` and in every `mu[i]`, so derivatives
//! are exact and symbolic.
//!
//! Values are always kept in canonical form: atoms merged into powers,
//! monomials with identical atom signatures merged, zero monomials dropped
//! and the remainder sorted by a deterministic key. Two functions compare
//! equal iff their canonical forms match.

mod parse;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrigKind {
    Sin,
    Cos,
}

/// `sin(freq*mu[index])^pow` or `cos(freq*mu[index])^pow`.
#[derive(Clone, Copy, Debug)]
pub struct TrigFactor {
    pub kind: TrigKind,
    pub freq: f64,
    pub index: usize,
    pub pow: u32,
}

#[derive(Clone, Debug)]
pub struct Monomial {
    coeff: Complex64,
    s_pow: u32,
    exp_rate: Complex64,
    mu_pows: Vec<(usize, u32)>,
    trig: Vec<TrigFactor>,
}

#[derive(Clone, Debug)]
pub struct ScalarFn {
    dim: usize,
    terms: Vec<Monomial>,
}

fn canon_f64(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn canon_c64(z: Complex64) -> Complex64 {
    Complex64::new(canon_f64(z.re), canon_f64(z.im))
}

fn cmp_c64(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

impl Monomial {
    fn constant(c: Complex64) -> Self {
        Monomial {
            coeff: c,
            s_pow: 0,
            exp_rate: Complex64::new(0.0, 0.0),
            mu_pows: Vec::new(),
            trig: Vec::new(),
        }
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    pub fn s_pow(&self) -> u32 {
        self.s_pow
    }

    pub fn exp_rate(&self) -> Complex64 {
        self.exp_rate
    }

    pub fn mu_pows(&self) -> &[(usize, u32)] {
        &self.mu_pows
    }

    pub fn trig(&self) -> &[TrigFactor] {
        &self.trig
    }

    fn max_index(&self) -> Option<usize> {
        let a = self.mu_pows.iter().map(|&(i, _)| i).max();
        let b = self.trig.iter().map(|t| t.index).max();
        a.max(b)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut mu_pows = self.mu_pows.clone();
        mu_pows.extend_from_slice(&other.mu_pows);
        let mut trig = self.trig.clone();
        trig.extend_from_slice(&other.trig);
        Monomial {
            coeff: self.coeff * other.coeff,
            s_pow: self.s_pow + other.s_pow,
            exp_rate: self.exp_rate + other.exp_rate,
            mu_pows,
            trig,
        }
    }

    /// Normalizes atoms in place. Returns false when the monomial is
    /// identically zero.
    fn normalize(&mut self) -> bool {
        self.exp_rate = canon_c64(self.exp_rate);

        self.mu_pows.retain(|&(_, p)| p > 0);
        self.mu_pows.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, u32)> = Vec::with_capacity(self.mu_pows.len());
        for &(i, p) in &self.mu_pows {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += p,
                _ => merged.push((i, p)),
            }
        }
        self.mu_pows = merged;

        let mut trig = Vec::with_capacity(self.trig.len());
        for t in &self.trig {
            if t.pow == 0 {
                continue;
            }
            let mut t = *t;
            t.freq = canon_f64(t.freq);
            if t.freq == 0.0 {
                match t.kind {
                    TrigKind::Sin => return false,
                    TrigKind::Cos => continue,
                }
            }
            if t.freq < 0.0 {
                t.freq = -t.freq;
                if t.kind == TrigKind::Sin && t.pow % 2 == 1 {
                    self.coeff = -self.coeff;
                }
            }
            trig.push(t);
        }
        trig.sort_by(|a, b| {
            a.kind
                .cmp(&b.kind)
                .then(a.index.cmp(&b.index))
                .then(a.freq.total_cmp(&b.freq))
        });
        let mut merged: Vec<TrigFactor> = Vec::with_capacity(trig.len());
        for t in trig {
            match merged.last_mut() {
                Some(last) if last.kind == t.kind && last.index == t.index && last.freq == t.freq => {
                    last.pow += t.pow
                }
                _ => merged.push(t),
            }
        }
        self.trig = merged;
        self.coeff = canon_c64(self.coeff);
        self.coeff != Complex64::new(0.0, 0.0)
    }

    /// Ordering on the atom signature, ignoring the coefficient.
    fn cmp_signature(&self, other: &Monomial) -> Ordering {
        self.s_pow
            .cmp(&other.s_pow)
            .then_with(|| cmp_c64(self.exp_rate, other.exp_rate))
            .then_with(|| self.mu_pows.cmp(&other.mu_pows))
            .then_with(|| {
                let a = self.trig.iter().map(|t| (t.kind, t.index, t.freq.to_bits(), t.pow));
                let b = other.trig.iter().map(|t| (t.kind, t.index, t.freq.to_bits(), t.pow));
                a.cmp(b)
            })
    }

    fn eval(&self, s: Complex64, mu: &[f64]) -> Complex64 {
        let mut v = self.coeff;
        if self.s_pow > 0 {
            v *= s.powu(self.s_pow);
        }
        if self.exp_rate != Complex64::new(0.0, 0.0) {
            v *= (self.exp_rate * s).exp();
        }
        for &(i, p) in &self.mu_pows {
            v *= mu[i].powi(p as i32);
        }
        for t in &self.trig {
            let x = t.freq * mu[t.index];
            let base = match t.kind {
                TrigKind::Sin => x.sin(),
                TrigKind::Cos => x.cos(),
            };
            v *= base.powi(t.pow as i32);
        }
        v
    }

    fn diff_s(&self, out: &mut Vec<Monomial>) {
        if self.s_pow > 0 {
            let mut m = self.clone();
            m.coeff *= self.s_pow as f64;
            m.s_pow -= 1;
            out.push(m);
        }
        if self.exp_rate != Complex64::new(0.0, 0.0) {
            let mut m = self.clone();
            m.coeff *= self.exp_rate;
            out.push(m);
        }
    }

    fn diff_mu(&self, index: usize, out: &mut Vec<Monomial>) {
        if let Some(pos) = self.mu_pows.iter().position(|&(i, _)| i == index) {
            let mut m = self.clone();
            let p = m.mu_pows[pos].1;
            m.coeff *= p as f64;
            m.mu_pows[pos].1 = p - 1;
            out.push(m);
        }
        for (pos, t) in self.trig.iter().enumerate() {
            if t.index != index {
                continue;
            }
            let mut m = self.clone();
            m.trig[pos].pow -= 1;
            let (kind, sign) = match t.kind {
                TrigKind::Sin => (TrigKind::Cos, 1.0),
                TrigKind::Cos => (TrigKind::Sin, -1.0),
            };
            m.coeff *= sign * t.freq * t.pow as f64;
            m.trig.push(TrigFactor { kind, freq: t.freq, index, pow: 1 });
            out.push(m);
        }
    }
}

impl ScalarFn {
    fn from_terms(dim: usize, terms: Vec<Monomial>) -> Self {
        let mut f = ScalarFn { dim, terms };
        f.canonicalize();
        f
    }

    pub fn zero(dim: usize) -> Self {
        ScalarFn { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: impl Into<Complex64>) -> Self {
        Self::from_terms(dim, vec![Monomial::constant(c.into())])
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, 1.0)
    }

    /// `s^q`.
    pub fn s_pow(dim: usize, q: u32) -> Self {
        let mut m = Monomial::constant(Complex64::new(1.0, 0.0));
        m.s_pow = q;
        Self::from_terms(dim, vec![m])
    }

    /// `exp(rate*s)`.
    pub fn exp(dim: usize, rate: impl Into<Complex64>) -> Self {
        let mut m = Monomial::constant(Complex64::new(1.0, 0.0));
        m.exp_rate = rate.into();
        Self::from_terms(dim, vec![m])
    }

    /// `mu[index]^q`. Panics if `index >= dim`.
    pub fn mu_pow(dim: usize, index: usize, q: u32) -> Self {
        assert!(index < dim, "parameter index {index} out of range for dimension {dim}");
        let mut m = Monomial::constant(Complex64::new(1.0, 0.0));
        m.mu_pows.push((index, q));
        Self::from_terms(dim, vec![m])
    }

    pub fn mu(dim: usize, index: usize) -> Self {
        Self::mu_pow(dim, index, 1)
    }

    pub fn sin_mu(dim: usize, freq: f64, index: usize) -> Self {
        Self::trig(dim, TrigKind::Sin, freq, index)
    }

    pub fn cos_mu(dim: usize, freq: f64, index: usize) -> Self {
        Self::trig(dim, TrigKind::Cos, freq, index)
    }

    fn trig(dim: usize, kind: TrigKind, freq: f64, index: usize) -> Self {
        assert!(index < dim, "parameter index {index} out of range for dimension {dim}");
        let mut m = Monomial::constant(Complex64::new(1.0, 0.0));
        m.trig.push(TrigFactor { kind, freq, index, pow: 1 });
        Self::from_terms(dim, vec![m])
    }

    /// Parses the coefficient mini-language, e.g. `-1*mu[0]*exp(-1*s)`.
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        parse::parse(src, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.terms
    }

    /// Same function declared over a larger parameter space.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if let Some(i) = self.terms.iter().filter_map(Monomial::max_index).max() {
            if i >= dim {
                return Err(Error::ParamIndex { index: i, dim });
            }
        }
        self.dim = dim;
        Ok(self)
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        let terms = self
            .terms
            .iter()
            .cloned()
            .map(|mut m| {
                m.coeff *= c;
                m
            })
            .collect();
        Self::from_terms(self.dim, terms)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn depends_on_s(&self) -> bool {
        self.terms
            .iter()
            .any(|m| m.s_pow > 0 || m.exp_rate != Complex64::new(0.0, 0.0))
    }

    pub fn depends_on_mu(&self) -> bool {
        self.terms.iter().any(|m| !m.mu_pows.is_empty() || !m.trig.is_empty())
    }

    /// True when `h(conj(s), mu) = conj(h(s, mu))` for real `mu`.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|m| m.coeff.im == 0.0 && m.exp_rate.im == 0.0)
    }

    pub fn eval(&self, s: Complex64, mu: &[f64]) -> Result<Complex64> {
        if mu.len() != self.dim {
            return Err(Error::ParamDim { expected: self.dim, got: mu.len() });
        }
        Ok(self.terms.iter().map(|m| m.eval(s, mu)).sum())
    }

    /// `order`-fold derivative with respect to `s`.
    pub fn diff_s(&self, order: usize) -> Self {
        let mut f = self.clone();
        for _ in 0..order {
            if f.is_zero() {
                break;
            }
            let mut out = Vec::new();
            for m in &f.terms {
                m.diff_s(&mut out);
            }
            f = Self::from_terms(self.dim, out);
        }
        f
    }

    /// Partial derivative with respect to `mu[index]`.
    pub fn diff_mu(&self, index: usize) -> Result<Self> {
        if index >= self.dim {
            return Err(Error::ParamIndex { index, dim: self.dim });
        }
        let mut out = Vec::new();
        for m in &self.terms {
            m.diff_mu(index, &mut out);
        }
        Ok(Self::from_terms(self.dim, out))
    }

    /// Groups monomials by their frequency dependence `s^q * exp(a*s)`.
    /// Each group is returned with its parameter-only factor.
    pub fn split_by_frequency(&self) -> Vec<(u32, Complex64, ScalarFn)> {
        let mut groups: Vec<(u32, Complex64, Vec<Monomial>)> = Vec::new();
        for m in &self.terms {
            let mut rest = m.clone();
            rest.s_pow = 0;
            rest.exp_rate = Complex64::new(0.0, 0.0);
            match groups
                .iter_mut()
                .find(|(q, a, _)| *q == m.s_pow && *a == m.exp_rate)
            {
                Some(g) => g.2.push(rest),
                None => groups.push((m.s_pow, m.exp_rate, vec![rest])),
            }
        }
        groups
            .into_iter()
            .map(|(q, a, ms)| (q, a, Self::from_terms(self.dim, ms)))
            .collect()
    }

    /// Re-establishes canonical form. Idempotent.
    pub fn canonicalize(&mut self) {
        let mut terms: Vec<Monomial> = std::mem::take(&mut self.terms)
            .into_iter()
            .filter_map(|mut m| m.normalize().then_some(m))
            .collect();
        terms.sort_by(|a, b| a.cmp_signature(b));
        let mut merged: Vec<Monomial> = Vec::with_capacity(terms.len());
        for m in terms {
            match merged.last_mut() {
                Some(last) if last.cmp_signature(&m) == Ordering::Equal => last.coeff += m.coeff,
                _ => merged.push(m),
            }
        }
        merged.retain_mut(|m| {
            m.coeff = canon_c64(m.coeff);
            m.coeff != Complex64::new(0.0, 0.0)
        });
        self.terms = merged;
    }
}

impl PartialEq for ScalarFn {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.terms.len() == other.terms.len()
            && self
                .terms
                .iter()
                .zip(&other.terms)
                .all(|(a, b)| a.coeff == b.coeff && a.cmp_signature(b) == Ordering::Equal)
    }
}

impl Add for &ScalarFn {
    type Output = ScalarFn;
    fn add(self, rhs: &ScalarFn) -> ScalarFn {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        ScalarFn::from_terms(self.dim.max(rhs.dim), terms)
    }
}

impl Sub for &ScalarFn {
    type Output = ScalarFn;
    fn sub(self, rhs: &ScalarFn) -> ScalarFn {
        self + &(-rhs)
    }
}

impl Mul for &ScalarFn {
    type Output = ScalarFn;
    fn mul(self, rhs: &ScalarFn) -> ScalarFn {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(a.mul(b));
            }
        }
        ScalarFn::from_terms(self.dim.max(rhs.dim), terms)
    }
}

impl Neg for &ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        self.scale(-1.0)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ScalarFn {
            type Output = ScalarFn;
            fn $method(self, rhs: ScalarFn) -> ScalarFn {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        -&self
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_c64(z: Complex64) -> String {
    if z.im == 0.0 {
        fmt_f64(z.re)
    } else {
        format!("({}+{}i)", fmt_f64(z.re), fmt_f64(z.im))
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, m) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            match m.s_pow {
                0 => {}
                1 => factors.push("s".to_string()),
                q => factors.push(format!("s^{q}")),
            }
            for &(i, p) in &m.mu_pows {
                factors.push(if p == 1 { format!("mu[{i}]") } else { format!("mu[{i}]^{p}") });
            }
            if m.exp_rate != Complex64::new(0.0, 0.0) {
                factors.push(format!("exp({}*s)", fmt_c64(m.exp_rate)));
            }
            for t in &m.trig {
                let name = match t.kind {
                    TrigKind::Sin => "sin",
                    TrigKind::Cos => "cos",
                };
                for _ in 0..t.pow {
                    factors.push(format!("{name}({}*mu[{}])", fmt_f64(t.freq), t.index));
                }
            }
            // a unit coefficient is implied when other factors are present
            if m.coeff != Complex64::new(1.0, 0.0) || factors.is_empty() {
                factors.insert(0, fmt_c64(m.coeff));
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Serialized as `{ dim, expr }` with `expr` in the mini-language.
impl Serialize for ScalarFn {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("ScalarFn", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("expr", &self.to_string())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ScalarFn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            expr: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        ScalarFn::parse(&raw.expr, raw.dim).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_monomials() {
        let f = ScalarFn::s_pow(0, 2);
        assert_eq!(f.eval(c(0.0, 2.0), &[]).unwrap(), c(-4.0, 0.0));

        let g = &ScalarFn::mu(1, 0) * &ScalarFn::exp(1, -1.0);
        assert_eq!(g.eval(c(0.0, 0.0), &[5.5]).unwrap(), c(5.5, 0.0));

        let one = ScalarFn::one(2);
        assert_eq!(one.eval(c(3.0, -7.0), &[0.1, 9.0]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn eval_rejects_wrong_parameter_length() {
        let f = ScalarFn::mu(2, 1);
        assert!(matches!(f.eval(c(0.0, 0.0), &[1.0]), Err(Error::ParamDim { expected: 2, got: 1 })));
    }

    #[test]
    fn diff_s_examples() {
        let f = ScalarFn::s_pow(0, 2);
        assert_eq!(f.diff_s(1), ScalarFn::s_pow(0, 1).scale(2.0));
        assert_eq!(f.diff_s(0), f);

        let g = &ScalarFn::mu(1, 0) * &ScalarFn::exp(1, -1.0);
        assert_eq!(g.diff_s(2), g);
        assert_eq!(g.diff_s(1), -&g);

        assert!(ScalarFn::constant(0, 3.0).diff_s(1).is_zero());
    }

    #[test]
    fn diff_s_matches_central_differences() {
        let g = &ScalarFn::mu(1, 0) * &ScalarFn::exp(1, -1.0);
        let mu = [1.7];
        let s = c(0.3, 0.4);
        let h = 1e-4;
        let fd2 = (g.eval(s + h, &mu).unwrap() - 2.0 * g.eval(s, &mu).unwrap() + g.eval(s - h, &mu).unwrap())
            / (h * h);
        let exact = g.diff_s(2).eval(s, &mu).unwrap();
        assert!((fd2 - exact).norm() < 1e-6 * exact.norm());
    }

    #[test]
    fn diff_mu_examples() {
        let g = &ScalarFn::mu(1, 0) * &ScalarFn::exp(1, -1.0);
        assert_eq!(g.diff_mu(0).unwrap(), ScalarFn::exp(1, -1.0));

        assert!(ScalarFn::s_pow(2, 2).diff_mu(1).unwrap().is_zero());

        let h = &ScalarFn::mu(2, 0) * &ScalarFn::mu_pow(2, 1, 2);
        let d = h.diff_mu(1).unwrap();
        assert_eq!(d, (&ScalarFn::mu(2, 0) * &ScalarFn::mu(2, 1)).scale(2.0));
        assert_eq!(d.eval(c(0.0, 0.0), &[2.0, 3.0]).unwrap(), c(12.0, 0.0));
        let step = 1e-6;
        let fd = (h.eval(c(0.0, 0.0), &[2.0, 3.0 + step]).unwrap()
            - h.eval(c(0.0, 0.0), &[2.0, 3.0 - step]).unwrap())
            / (2.0 * step);
        assert!((fd.re - 12.0).abs() < 1e-6);

        assert!(matches!(h.diff_mu(2), Err(Error::ParamIndex { index: 2, dim: 2 })));
    }

    #[test]
    fn trig_derivatives() {
        let f = ScalarFn::sin_mu(1, 2.0, 0);
        assert_eq!(f.diff_mu(0).unwrap(), ScalarFn::cos_mu(1, 2.0, 0).scale(2.0));
        let g = ScalarFn::cos_mu(1, 3.0, 0);
        assert_eq!(g.diff_mu(0).unwrap(), ScalarFn::sin_mu(1, 3.0, 0).scale(-3.0));
    }

    #[test]
    fn canonical_merging() {
        let a = &ScalarFn::s_pow(1, 1) + &ScalarFn::mu(1, 0);
        let b = &ScalarFn::mu(1, 0) + &ScalarFn::s_pow(1, 1);
        assert_eq!(a, b);
        let z = &a - &b;
        assert!(z.is_zero());
        let e = &ScalarFn::exp(0, -1.0) * &ScalarFn::exp(0, 1.0);
        assert_eq!(e, ScalarFn::one(0));
        assert_eq!(ScalarFn::sin_mu(1, -2.0, 0), ScalarFn::sin_mu(1, 2.0, 0).scale(-1.0));
        assert!(ScalarFn::sin_mu(1, 0.0, 0).is_zero());
    }

    #[test]
    fn display_round_trips() {
        let f = &(&ScalarFn::s_pow(2, 2).scale(4.0) + &(&ScalarFn::mu(2, 1) * &ScalarFn::exp(2, -1.0)).scale(-0.2))
            + &(&ScalarFn::cos_mu(2, 1.5, 0) * &ScalarFn::constant(2, c(0.5, -2.0)));
        let txt = f.to_string();
        let g = ScalarFn::parse(&txt, 2).unwrap();
        assert_eq!(f, g, "{txt}");
    }

    #[test]
    fn split_by_frequency_groups_terms() {
        let f = ScalarFn::parse("s*mu[0] + 2*s + -1*mu[0]*exp(-1*s) + 3", 1).unwrap();
        let groups = f.split_by_frequency();
        assert_eq!(groups.len(), 3);
        let s1 = groups.iter().find(|g| g.0 == 1).unwrap();
        assert_eq!(s1.2, ScalarFn::parse("mu[0] + 2", 1).unwrap());
    }
}
