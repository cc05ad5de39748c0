use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Scalar input signal `u(t)` written in a small expression language:
/// numbers, `t`, `+ - * /`, `^` with integer exponents, parentheses and the
/// functions `sin`, `cos`, `exp`.
///
/// ```
/// use pbmor::sim::Signal;
/// let u = Signal::parse("0.05*(cos(10*t) + cos(5*t))").unwrap();
/// assert!((u.eval(0.0) - 0.1).abs() < 1e-15);
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    src: String,
    expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
enum Expr {
    Num(f64),
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
}

impl Expr {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::T => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, k) => a.eval(t).powi(*k),
            Expr::Call(f, a) => {
                let x = a.eval(t);
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                }
            }
        }
    }
}

impl Signal {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let expr = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Signal { src: src.trim().to_string(), expr })
    }

    pub fn constant(c: f64) -> Self {
        Signal { src: crate::scalarfun::fmt_f64(c), expr: Expr::Num(c) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.expr.eval(t)
    }

    pub fn is_zero(&self) -> bool {
        self.expr == Expr::Num(0.0)
    }

    pub fn source(&self) -> &str {
        &self.src
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl Serialize for Signal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.src)
    }
}

impl<'de> Deserialize<'de> for Signal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Signal::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { offset: self.pos, msg: msg.to_string() }
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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let k: i32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| Error::Parse { offset: start, msg: "expected integer exponent".into() })?;
            return Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let func = match name {
                    "t" => return Ok(Expr::T),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    _ => return Err(Error::Parse { offset: start, msg: format!("unknown name '{name}'") }),
                };
                if !self.eat(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                i = j;
                while i < s.len() && s[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap();
        let x: f64 = text.parse().map_err(|_| Error::Parse { offset: start, msg: format!("bad number '{text}'") })?;
        self.pos = i;
        Ok(Expr::Num(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_benchmark_inputs() {
        let u = Signal::parse("sin(200 t) + 200");
        assert!(u.is_err(), "implicit multiplication is not supported");
        let u = Signal::parse("sin(200*t) + 200").unwrap();
        assert!((u.eval(0.01) - (2.0f64.sin() + 200.0)).abs() < 1e-12);
        let u = Signal::parse("-cos(200*t) - 200").unwrap();
        assert!((u.eval(0.0) + 201.0).abs() < 1e-12);
    }

    #[test]
    fn precedence_and_powers() {
        let u = Signal::parse("1 + 2*t^2 - t/4").unwrap();
        assert_eq!(u.eval(2.0), 1.0 + 8.0 - 0.5);
        let u = Signal::parse("-t^2").unwrap();
        assert_eq!(u.eval(3.0), -9.0);
        assert_eq!(Signal::parse("2e-1*exp(0*t)").unwrap().eval(5.0), 0.2);
    }

    #[test]
    fn errors_carry_offsets() {
        match Signal::parse("1 + foo(t)") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(Signal::parse("(t").is_err());
        assert!(Signal::parse("t t").is_err());
    }

    #[test]
    fn serde_round_trip() {
        let u = Signal::parse("0.05*(cos(10*t) + cos(5*t))").unwrap();
        let json = serde_json::to_string(&u).unwrap();
        let back: Signal = serde_json::from_str(&json).unwrap();
        assert_eq!(u, back);
    }
}
