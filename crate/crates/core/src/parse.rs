//! Literals: integer polynomials in `T` (and `S`), matrices, extension
//! polynomials and family parameters.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary ('*' unary)*
//! unary := '-' unary | power
//! power := atom ('^' integer)?
//! atom  := integer | 'T' | 'S' | '(' expr ')'
//! ```

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lambda::PowerSeries;
use crate::padic::PAdicRing;
use crate::specialize::{FamilyKind, UnitRule};

const MAX_EXPONENT: u32 = 4096;

/// Integer polynomial in `S` and `T`: `coeffs[s][t]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiPoly {
    coeffs: Vec<Vec<BigInt>>,
}

impl BiPoly {
    fn constant(c: BigInt) -> Self {
        BiPoly { coeffs: vec![vec![c]] }.trimmed()
    }

    fn monomial(s: usize, t: usize) -> Self {
        let mut coeffs = vec![Vec::new(); s + 1];
        coeffs[s] = vec![BigInt::zero(); t + 1];
        coeffs[s][t] = BigInt::one();
        BiPoly { coeffs }
    }

    fn trimmed(mut self) -> Self {
        for row in &mut self.coeffs {
            while row.last().is_some_and(|c| c.is_zero()) {
                row.pop();
            }
        }
        while self.coeffs.last().is_some_and(|r| r.is_empty()) {
            self.coeffs.pop();
        }
        self
    }

    fn add(&self, other: &BiPoly, sign: i32) -> BiPoly {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < other.coeffs.len() {
            coeffs.resize(other.coeffs.len(), Vec::new());
        }
        for (s, row) in other.coeffs.iter().enumerate() {
            if coeffs[s].len() < row.len() {
                coeffs[s].resize(row.len(), BigInt::zero());
            }
            for (t, c) in row.iter().enumerate() {
                if sign >= 0 {
                    coeffs[s][t] += c;
                } else {
                    coeffs[s][t] -= c;
                }
            }
        }
        BiPoly { coeffs }.trimmed()
    }

    fn mul(&self, other: &BiPoly) -> BiPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return BiPoly { coeffs: Vec::new() };
        }
        let mut coeffs = vec![Vec::new(); self.coeffs.len() + other.coeffs.len() - 1];
        for (s1, r1) in self.coeffs.iter().enumerate() {
            for (s2, r2) in other.coeffs.iter().enumerate() {
                if r1.is_empty() || r2.is_empty() {
                    continue;
                }
                let row = &mut coeffs[s1 + s2];
                if row.len() < r1.len() + r2.len() - 1 {
                    row.resize(r1.len() + r2.len() - 1, BigInt::zero());
                }
                for (t1, a) in r1.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (t2, b) in r2.iter().enumerate() {
                        row[t1 + t2] += a * b;
                    }
                }
            }
        }
        BiPoly { coeffs }.trimmed()
    }

    fn pow(&self, e: u32) -> BiPoly {
        let mut acc = BiPoly::constant(BigInt::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Degree in `S`, with `None` for the zero polynomial.
    pub fn s_degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Largest `T`-degree among the coefficients.
    pub fn t_degree(&self) -> usize {
        self.coeffs.iter().map(|r| r.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Coefficient of `S^s` as a list of integers in `T`.
    pub fn s_coeff(&self, s: usize) -> &[BigInt] {
        self.coeffs.get(s).map_or(&[], |r| r.as_slice())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    allow_s: bool,
}

impl<'a> Parser<'a> {
    fn error(&self, position: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) {
        self.pos += self.src[self.pos..].chars().next().map_or(0, char::len_utf8);
    }

    fn expr(&mut self) -> Result<BiPoly> {
        let mut acc = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.bump();
            let rhs = self.term()?;
            acc = acc.add(&rhs, if c == '+' { 1 } else { -1 });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<BiPoly> {
        let mut acc = self.unary()?;
        while self.peek() == Some('*') {
            self.bump();
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<BiPoly> {
        if self.peek() == Some('-') {
            self.bump();
            return Ok(BiPoly::constant(BigInt::zero()).add(&self.unary()?, -1));
        }
        self.power()
    }

    fn power(&mut self) -> Result<BiPoly> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.bump();
            let at = self.pos;
            let e = self.integer()?;
            let e: u32 = u32::try_from(&e)
                .ok()
                .filter(|&e| e <= MAX_EXPONENT)
                .ok_or_else(|| self.error(at, format!("exponent must be between 0 and {MAX_EXPONENT}")))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(start, "expected an integer"));
        }
        Ok(self.src[start..self.pos].parse().expect("digits"))
    }

    fn atom(&mut self) -> Result<BiPoly> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(BiPoly::constant(self.integer()?)),
            Some('T') => {
                self.bump();
                Ok(BiPoly::monomial(0, 1))
            }
            Some('S') if self.allow_s => {
                self.bump();
                Ok(BiPoly::monomial(1, 0))
            }
            Some('(') => {
                self.bump();
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error(self.pos, "expected ')'"));
                }
                self.bump();
                Ok(inner)
            }
            Some(c) => Err(self.error(self.pos, format!("unexpected character '{c}'"))),
            None => Err(self.error(self.pos, "unexpected end of input")),
        }
    }

    fn finish(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(self.error(self.pos, format!("unexpected character '{c}'"))),
        }
    }
}

fn parse_bipoly(src: &str, offset: usize, allow_s: bool) -> Result<BiPoly> {
    let mut p = Parser { src, pos: 0, allow_s };
    let out = p.expr().and_then(|e| p.finish().map(|_| e));
    out.map_err(|e| match e {
        Error::Parse { position, message } => Error::Parse {
            position: position + offset,
            message,
        },
        other => other,
    })
}

/// Integer polynomial in `T`, as ascending coefficients.
pub fn parse_poly(src: &str) -> Result<Vec<BigInt>> {
    Ok(parse_bipoly(src, 0, false)?.s_coeff(0).to_vec())
}

pub fn parse_series(src: &str, ring: &Arc<PAdicRing>, t_precision: usize) -> Result<PowerSeries> {
    Ok(PowerSeries::from_bigints(ring, t_precision, &parse_poly(src)?))
}

/// `"[a, b; c, d]"`: rows separated by `;`, entries by `,`.
pub fn parse_matrix(src: &str) -> Result<Vec<Vec<Vec<BigInt>>>> {
    let trimmed_start = src.len() - src.trim_start().len();
    let body = src.trim();
    let inner = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| Error::Parse {
            position: trimmed_start,
            message: "matrix literal must be enclosed in [ ]".into(),
        })?;
    let mut offset = trimmed_start + 1;
    let mut rows = Vec::new();
    for row in inner.split(';') {
        let mut entries = Vec::new();
        let mut entry_offset = offset;
        for entry in row.split(',') {
            entries.push(parse_bipoly(entry, entry_offset, false)?.s_coeff(0).to_vec());
            entry_offset += entry.len() + 1;
        }
        rows.push(entries);
        offset += row.len() + 1;
    }
    Ok(rows)
}

pub fn parse_matrix_series(src: &str, ring: &Arc<PAdicRing>, t_precision: usize) -> Result<Vec<Vec<PowerSeries>>> {
    Ok(parse_matrix(src)?
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| PowerSeries::from_bigints(ring, t_precision, &c))
                .collect()
        })
        .collect())
}

/// Polynomial in `S` with coefficients in `Z[T]`, required monic in `S`.
pub fn parse_extension(src: &str) -> Result<BiPoly> {
    let h = parse_bipoly(src, 0, true)?;
    let d = h.s_degree().unwrap_or(0);
    if d == 0 || h.s_coeff(d) != [BigInt::one()] {
        return Err(Error::Parse {
            position: 0,
            message: "h must be monic in S of degree at least 1".into(),
        });
    }
    Ok(h)
}

pub fn parse_extension_series(src: &str, ring: &Arc<PAdicRing>, t_precision: usize) -> Result<Vec<PowerSeries>> {
    let h = parse_extension(src)?;
    Ok((0..=h.s_degree().unwrap_or(0))
        .map(|s| PowerSeries::from_bigints(ring, t_precision, h.s_coeff(s)))
        .collect())
}

/// Parsed `kind,z,r,aRule,nMax`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyLiteral {
    pub kind: FamilyKind,
    pub z: Vec<BigInt>,
    pub r: Vec<BigInt>,
    pub units: UnitRule,
    pub n_max: u32,
}

/// `"outside-p,T,0,const:1,20"`; `kind` is `outside-p` (or `L`) or
/// `over-p` (or `E`); the unit rule is `const:<k>` or `seed:<k>`.
pub fn parse_family(src: &str) -> Result<FamilyLiteral> {
    let fields: Vec<&str> = src.split(',').collect();
    if fields.len() != 5 {
        return Err(Error::Parse {
            position: 0,
            message: format!("family literal needs 5 comma-separated fields, found {}", fields.len()),
        });
    }
    let offsets: Vec<usize> = fields
        .iter()
        .scan(0, |acc, f| {
            let here = *acc;
            *acc += f.len() + 1;
            Some(here)
        })
        .collect();
    let kind = match fields[0].trim() {
        "outside-p" | "L" => FamilyKind::OutsideP,
        "over-p" | "E" => FamilyKind::OverP,
        other => {
            return Err(Error::Parse {
                position: 0,
                message: format!("unknown family kind '{other}'"),
            })
        }
    };
    let z = parse_bipoly(fields[1], offsets[1], false)?.s_coeff(0).to_vec();
    let r = parse_bipoly(fields[2], offsets[2], false)?.s_coeff(0).to_vec();
    let units = parse_unit_rule(fields[3].trim()).ok_or_else(|| Error::Parse {
        position: offsets[3],
        message: "unit rule must be const:<k> or seed:<k>".into(),
    })?;
    let n_max = fields[4].trim().parse().map_err(|_| Error::Parse {
        position: offsets[4],
        message: "nMax must be a nonnegative integer".into(),
    })?;
    Ok(FamilyLiteral {
        kind,
        z,
        r,
        units,
        n_max,
    })
}

pub fn parse_unit_rule(src: &str) -> Option<UnitRule> {
    let (tag, value) = src.split_once(':')?;
    let value: u64 = value.trim().parse().ok()?;
    match tag.trim() {
        "const" => Some(UnitRule::Const(value)),
        "seed" => Some(UnitRule::Seeded(value)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn polynomials() {
        assert_eq!(parse_poly("T^2 - 2*T - 3").unwrap(), ints(&[-3, -2, 1]));
        assert_eq!(parse_poly("(T+3)^2").unwrap(), ints(&[9, 6, 1]));
        assert_eq!(parse_poly("-(T - 1) * 2").unwrap(), ints(&[2, -2]));
        assert_eq!(parse_poly("9").unwrap(), ints(&[9]));
        assert_eq!(parse_poly("T - T").unwrap(), ints(&[]));
        assert_eq!(
            parse_poly("123456789012345678901234567890").unwrap()[0].to_string(),
            "123456789012345678901234567890"
        );
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_poly("T + @").unwrap_err(),
            Error::Parse {
                position: 4,
                message: "unexpected character '@'".into()
            }
        );
        assert!(matches!(parse_poly("(T + 1"), Err(Error::Parse { position: 6, .. })));
        assert!(matches!(parse_poly("S + 1"), Err(Error::Parse { position: 0, .. })));
        assert!(matches!(parse_poly("T T"), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse_poly(""), Err(Error::Parse { position: 0, .. })));
    }

    #[test]
    fn matrices() {
        let m = parse_matrix("[T+3, 0; 0, 9]").unwrap();
        assert_eq!(m, vec![vec![ints(&[3, 1]), ints(&[])], vec![ints(&[]), ints(&[9])]]);
        assert!(matches!(
            parse_matrix("[T, 3; 0, @]"),
            Err(Error::Parse { position: 10, .. })
        ));
        assert!(parse_matrix("T, 3").is_err());
    }

    #[test]
    fn extensions() {
        let h = parse_extension("S^3 + 3*S + T^2").unwrap();
        assert_eq!(h.s_degree(), Some(3));
        assert_eq!(h.s_coeff(0), ints(&[0, 0, 1]).as_slice());
        assert_eq!(h.s_coeff(1), ints(&[3]).as_slice());
        assert_eq!(h.t_degree(), 2);
        assert!(parse_extension("2*S^2 + 1").is_err());
        assert!(parse_extension("T + 1").is_err());
    }

    #[test]
    fn families() {
        let f = parse_family("outside-p,T,0,const:1,20").unwrap();
        assert_eq!(f.kind, FamilyKind::OutsideP);
        assert_eq!(f.z, ints(&[0, 1]));
        assert_eq!(f.units, UnitRule::Const(1));
        assert_eq!(f.n_max, 20);
        let f = parse_family("E, T^2, 0, seed:7, 8").unwrap();
        assert_eq!((f.kind, f.units, f.n_max), (FamilyKind::OverP, UnitRule::Seeded(7), 8));
        assert!(matches!(
            parse_family("L,T,0,bogus,3"),
            Err(Error::Parse { position: 6, .. })
        ));
        assert!(parse_family("L,T,0").is_err());
    }
}
