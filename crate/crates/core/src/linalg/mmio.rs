//! Matrix Market I/O: coordinate and array layouts, real/integer/complex
//! fields, general/symmetric/skew-symmetric/hermitian symmetry.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::ConstMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
    Hermitian,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::MatrixMarket(format!("line {line}: {msg}"))
}

pub fn parse(text: &str) -> Result<ConstMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(bad(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(bad(1, format!("unknown format '{other}'"))),
    };
    let field = match h[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(bad(1, format!("unsupported field '{other}'"))),
    };
    let sym = match h[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(bad(1, format!("unknown symmetry '{other}'"))),
    };
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sl, size_line) = body.next().ok_or_else(|| bad(2, "missing size line"))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(sl, format!("bad size '{t}'"))))
        .collect::<Result<_>>()?;
    let width = if field == Field::Complex { 2 } else { 1 };
    let value = |ln: usize, toks: &[&str]| -> Result<Complex64> {
        let f = |t: &str| t.parse::<f64>().map_err(|_| bad(ln, format!("bad number '{t}'")));
        Ok(if width == 2 { Complex64::new(f(toks[0])?, f(toks[1])?) } else { Complex64::new(f(toks[0])?, 0.0) })
    };
    let mut trip = Vec::new();
    let mirror = |trip: &mut Vec<(usize, usize, Complex64)>, r: usize, c: usize, v: Complex64| {
        trip.push((r, c, v));
        if r != c {
            match sym {
                Symmetry::General => {}
                Symmetry::Symmetric => trip.push((c, r, v)),
                Symmetry::Skew => trip.push((c, r, -v)),
                Symmetry::Hermitian => trip.push((c, r, v.conj())),
            }
        }
    };
    let (rows, cols) = if coordinate {
        let [rows, cols, nnz] = sizes[..] else { return Err(bad(sl, "coordinate size line needs 3 integers")) };
        let mut count = 0;
        for (ln, l) in body {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 + width {
                return Err(bad(ln, format!("expected {} fields", 2 + width)));
            }
            let r: usize = toks[0].parse().map_err(|_| bad(ln, "bad row index"))?;
            let c: usize = toks[1].parse().map_err(|_| bad(ln, "bad column index"))?;
            if r == 0 || c == 0 || r > rows || c > cols {
                return Err(bad(ln, format!("index ({r}, {c}) out of range")));
            }
            mirror(&mut trip, r - 1, c - 1, value(ln, &toks[2..])?);
            count += 1;
        }
        if count != nnz {
            return Err(bad(sl, format!("declared {nnz} entries, found {count}")));
        }
        (rows, cols)
    } else {
        let [rows, cols] = sizes[..] else { return Err(bad(sl, "array size line needs 2 integers")) };
        let mut positions = Vec::new();
        for c in 0..cols {
            let start = match sym {
                Symmetry::General => 0,
                Symmetry::Skew => c + 1,
                _ => c,
            };
            for r in start..rows {
                positions.push((r, c));
            }
        }
        let mut it = positions.into_iter();
        for (ln, l) in body {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != width {
                return Err(bad(ln, format!("expected {width} fields")));
            }
            let (r, c) = it.next().ok_or_else(|| bad(ln, "too many entries"))?;
            mirror(&mut trip, r, c, value(ln, &toks)?);
        }
        if it.next().is_some() {
            return Err(bad(sl, "too few entries"));
        }
        (rows, cols)
    };
    ConstMatrix::from_triplets(rows, cols, trip)
}

pub fn read(path: &Path) -> Result<ConstMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse(&text).map_err(|e| match e {
        Error::MatrixMarket(m) => Error::MatrixMarket(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// Coordinate/general layout; the field is real when every entry is real.
/// Output is a deterministic function of the matrix.
pub fn to_string(m: &ConstMatrix) -> String {
    let trip = m.triplets();
    let real = m.is_real();
    let mut out = String::new();
    let field = if real { "real" } else { "complex" };
    writeln!(out, "%%MatrixMarket matrix coordinate {field} general").unwrap();
    writeln!(out, "{} {} {}", m.rows(), m.cols(), trip.len()).unwrap();
    for (r, c, v) in trip {
        if real {
            writeln!(out, "{} {} {:.17e}", r + 1, c + 1, v.re).unwrap();
        } else {
            writeln!(out, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im).unwrap();
        }
    }
    out
}

pub fn write(path: &Path, m: &ConstMatrix) -> Result<()> {
    std::fs::write(path, to_string(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    #[test]
    fn coordinate_round_trip() {
        let d = CMat::from_fn(3, 2, |i, j| Complex64::new(i as f64 - j as f64 * 0.1, (i == j) as u8 as f64));
        let m = ConstMatrix::Dense(d.clone());
        let back = parse(&to_string(&m)).unwrap();
        assert_eq!(back.to_dense(), d);
    }

    #[test]
    fn symmetric_and_array_inputs() {
        let s = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 1.0\n2 1 3\n";
        let d = parse(s).unwrap().to_dense();
        assert_eq!(d[(0, 1)], Complex64::new(3.0, 0.0));
        assert_eq!(d[(1, 0)], Complex64::new(3.0, 0.0));
        let a = "%%MatrixMarket matrix array complex general\n2 1\n1 2\n3 -4\n";
        let d = parse(a).unwrap().to_dense();
        assert_eq!(d[(1, 0)], Complex64::new(3.0, -4.0));
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(parse("").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate pattern general\n2 2 0\n").is_err());
    }
}
