//! Recursive-descent parser for the coefficient mini-language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | NUMBER ['i'] | '(' expr ')'
//!         | 's' ['^' INT] | 'mu[' INT ']' ['^' INT]
//!         | 'exp(' NUMBER '*s)' | 'sin(' NUMBER '*mu[' INT '])' | 'cos(' ... ')'
//! ```
//!
//! Arguments of `exp`, `sin` and `cos` are parsed as expressions and must
//! reduce to a single linear monomial (`a*s` or `c*mu[i]`).

use num_complex::Complex64;

use super::{ScalarFn, TrigKind};
use crate::error::{Error, Result};

pub(super) fn parse(src: &str, dim: usize) -> Result<ScalarFn> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, dim };
    let f = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { offset: self.pos, msg: msg.into() }
    }

    fn error_at(&self, offset: usize, msg: impl Into<String>) -> Error {
        Error::Parse { offset, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn starts_with_word(&mut self, word: &str) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(word.as_bytes())
    }

    fn expr(&mut self) -> Result<ScalarFn> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarFn> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error_at(start, "integer out of range"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("expected number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error_at(start, "malformed number"))
    }

    fn param_index(&mut self) -> Result<usize> {
        let at = self.pos;
        let i = self.integer()? as usize;
        if i >= self.dim {
            return Err(self.error_at(at, format!("parameter index {i} out of range for dimension {}", self.dim)));
        }
        Ok(i)
    }

    fn factor(&mut self) -> Result<ScalarFn> {
        let dim = self.dim;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(b'(') => {
                self.pos += 1;
                let f = self.expr()?;
                self.expect(b')')?;
                Ok(f)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let x = self.number()?;
                if self.src.get(self.pos) == Some(&b'i') {
                    self.pos += 1;
                    Ok(ScalarFn::constant(dim, Complex64::new(0.0, x)))
                } else {
                    Ok(ScalarFn::constant(dim, x))
                }
            }
            Some(_) if self.starts_with_word("exp(") => {
                self.pos += 4;
                let at = self.pos;
                let arg = self.expr()?;
                self.expect(b')')?;
                let rate = linear_in_s(&arg).ok_or_else(|| self.error_at(at, "exp argument must have the form a*s"))?;
                Ok(ScalarFn::exp(dim, rate))
            }
            Some(_) if self.starts_with_word("sin(") || self.starts_with_word("cos(") => {
                let kind = if self.src[self.pos] == b's' { TrigKind::Sin } else { TrigKind::Cos };
                self.pos += 4;
                let at = self.pos;
                let arg = self.expr()?;
                self.expect(b')')?;
                let (freq, index) = linear_in_mu(&arg)
                    .ok_or_else(|| self.error_at(at, "trigonometric argument must have the form c*mu[i]"))?;
                Ok(ScalarFn::trig(dim, kind, freq, index))
            }
            Some(_) if self.starts_with_word("mu[") => {
                self.pos += 3;
                let i = self.param_index()?;
                self.expect(b']')?;
                let q = if self.eat(b'^') { self.integer()? } else { 1 };
                Ok(ScalarFn::mu_pow(dim, i, q))
            }
            Some(b's') => {
                self.pos += 1;
                let q = if self.eat(b'^') { self.integer()? } else { 1 };
                Ok(ScalarFn::s_pow(dim, q))
            }
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
        }
    }
}

fn single(f: &ScalarFn) -> Option<&super::Monomial> {
    match f.terms.as_slice() {
        [m] => Some(m),
        _ => None,
    }
}

fn linear_in_s(f: &ScalarFn) -> Option<Complex64> {
    if f.is_zero() {
        return Some(Complex64::new(0.0, 0.0));
    }
    let m = single(f)?;
    (m.s_pow == 1 && m.exp_rate == Complex64::new(0.0, 0.0) && m.mu_pows.is_empty() && m.trig.is_empty())
        .then_some(m.coeff)
}

fn linear_in_mu(f: &ScalarFn) -> Option<(f64, usize)> {
    let m = single(f)?;
    let ok = m.s_pow == 0
        && m.exp_rate == Complex64::new(0.0, 0.0)
        && m.trig.is_empty()
        && m.coeff.im == 0.0
        && matches!(m.mu_pows.as_slice(), [(_, 1)]);
    ok.then(|| (m.coeff.re, m.mu_pows[0].0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_forms() {
        let f = parse("2*s^2 + mu[0]^2 + exp(-1.5*s) + sin(2*mu[1]) + cos(0.5*mu[0])", 2).unwrap();
        let g = &(&(&(&ScalarFn::s_pow(2, 2).scale(2.0) + &ScalarFn::mu_pow(2, 0, 2)) + &ScalarFn::exp(2, -1.5))
            + &ScalarFn::sin_mu(2, 2.0, 1))
            + &ScalarFn::cos_mu(2, 0.5, 0);
        assert_eq!(f, g);
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse("  -1 * mu[ 0 ] * exp( -1 * s )", 1).unwrap();
        let b = parse("-1*mu[0]*exp(-1*s)", 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_report_offsets() {
        match parse("s + mu[3]", 2) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("{other:?}"),
        }
        match parse("s + ", 1) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse("exp(mu[0])", 1) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse("s s", 1).is_err());
    }

    #[test]
    fn complex_literals() {
        let f = parse("(0.5+-2i)*s", 0).unwrap();
        let v = f.eval(Complex64::new(1.0, 0.0), &[]).unwrap();
        assert_eq!(v, Complex64::new(0.5, -2.0));
    }
}
