//! Monogenic extensions `C = Λ[S]/(h)` and reducedness of their fibers.
//!
//! The ramification locus is over-approximated by the height-one support of
//! `Res_S(h, h')`. A fiber `C/𝔭C` is certified reduced when the resultant
//! is nonzero in the domain `Λ/𝔭`; it is certified non-reduced only with an
//! explicit nilpotent element. Normality of `C` is assumed, not checked.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use rayon::prelude::*;

use crate::charideal::{characteristic_ideal, determinant, CharacteristicIdeal, HeightOnePrime, PresentationModule};
use crate::error::{Error, Result};
use crate::lambda::{DistinguishedPoly, PowerSeries, ZpPoly, DIVISIBILITY_SLACK};
use crate::padic::PAdicRing;
use crate::specialize::{element, SpecializationFamily};

/// `h = S^d + c_{d-1} S^{d-1} + ... + c_0` with coefficients in Λ.
#[derive(Debug, Clone)]
pub struct MonogenicExtension {
    /// Ascending coefficients; the last one is 1.
    coeffs: Vec<PowerSeries>,
    witness: PowerSeries,
}

impl MonogenicExtension {
    pub fn new(coeffs: Vec<PowerSeries>) -> Result<Self> {
        let d = coeffs.len().saturating_sub(1);
        if d < 2 {
            return Err(Error::InvalidConfig("h must have degree at least 2 in S".into()));
        }
        let lead = &coeffs[d];
        if *lead != PowerSeries::one(lead.ring(), lead.t_precision()) {
            return Err(Error::InvalidConfig("h must be monic in S".into()));
        }
        let derivative: Vec<PowerSeries> = (1..=d).map(|i| coeffs[i].scale_i64(i as i64)).collect();
        let witness = sylvester_resultant(&coeffs, &derivative)?;
        if witness.is_zero_at_precision() {
            return Err(Error::InseparableAtPrecision);
        }
        Ok(MonogenicExtension { coeffs, witness })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[PowerSeries] {
        &self.coeffs
    }

    /// `Res_S(h, ∂h/∂S)`.
    pub fn separability_witness(&self) -> &PowerSeries {
        &self.witness
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        self.coeffs[0].ring()
    }

    pub fn t_precision(&self) -> usize {
        self.coeffs[0].t_precision()
    }
}

impl fmt::Display for MonogenicExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        f.write_str(&format_s_poly(&terms))
    }
}

/// Determinant of the Sylvester matrix of two S-polynomials (ascending
/// coefficients, nonzero leading terms).
pub fn sylvester_resultant(a: &[PowerSeries], b: &[PowerSeries]) -> Result<PowerSeries> {
    let m = a.len() - 1;
    let n = b.len() - 1;
    let size = m + n;
    let zero = PowerSeries::zero(a[0].ring(), a[0].t_precision());
    let mut entries = vec![zero; size * size];
    for row in 0..n {
        for i in 0..=m {
            entries[row * size + row + i] = a[m - i].clone();
        }
    }
    for row in 0..m {
        for i in 0..=n {
            entries[(n + row) * size + row + i] = b[n - i].clone();
        }
    }
    determinant(size, &entries)
}

#[derive(Debug, Clone)]
pub struct RamificationReport {
    pub resultant: PowerSeries,
    pub char_data: CharacteristicIdeal,
    /// Height-one primes dividing the resultant.
    pub primes: Vec<HeightOnePrime>,
}

pub fn ramification_locus(ext: &MonogenicExtension) -> Result<RamificationReport> {
    let resultant = ext.witness.clone();
    let char_data = characteristic_ideal(&PresentationModule::diagonal(vec![resultant.clone()])?, &[])?;
    let mut primes = Vec::new();
    if char_data.mu > 0 {
        primes.push(HeightOnePrime::OverP);
    }
    for f in &char_data.factors {
        primes.push(HeightOnePrime::OutsideP(f.poly.clone()));
    }
    if let Some(r) = &char_data.residual {
        primes.push(HeightOnePrime::OutsideP(r.clone()));
    }
    Ok(RamificationReport {
        resultant,
        char_data,
        primes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberStatus {
    Reduced,
    NotReduced,
    Indeterminate,
}

impl FiberStatus {
    pub fn label(self) -> &'static str {
        match self {
            FiberStatus::Reduced => "reduced",
            FiberStatus::NotReduced => "not-reduced",
            FiberStatus::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberReport {
    pub prime: HeightOnePrime,
    pub status: FiberStatus,
    /// Valuation data of the resultant modulo the prime.
    pub evidence: String,
    /// Nonzero nilpotent element of `C/𝔭C`, when one was found.
    pub witness: Option<String>,
    /// Normality of `C` is taken as a hypothesis.
    pub normality_assumed: bool,
}

/// The domain `Λ/𝔭`: `F_p[[T]]` truncated at the T-precision for `(p)`,
/// `Z_p[T]/(g)` for `(g)`.
enum Fiber {
    ModP { ring: Arc<PAdicRing>, t_precision: usize },
    ModG { g: ZpPoly, threshold: u32 },
}

impl Fiber {
    fn new(ext: &MonogenicExtension, prime: &HeightOnePrime) -> Result<Fiber> {
        Ok(match prime {
            HeightOnePrime::OverP => Fiber::ModP {
                ring: PAdicRing::new(ext.ring().prime(), 1)?,
                t_precision: ext.t_precision(),
            },
            HeightOnePrime::OutsideP(g) => {
                let g = if g.ring().precision() > ext.ring().precision() {
                    g.reduce_precision(ext.ring())
                } else {
                    g.clone()
                };
                let threshold = g.ring().precision().saturating_sub(DIVISIBILITY_SLACK);
                Fiber::ModG {
                    g: g.into_poly(),
                    threshold,
                }
            }
        })
    }

    fn embed(&self, x: &PowerSeries) -> ZpPoly {
        match self {
            Fiber::ModP { ring, .. } => self.reduce(x.to_poly().reduce_precision(ring)),
            Fiber::ModG { g, .. } => self.reduce(x.to_poly().reduce_precision(g.ring())),
        }
    }

    fn reduce(&self, x: ZpPoly) -> ZpPoly {
        match self {
            Fiber::ModP { ring, t_precision } => {
                let coeffs = (0..*t_precision).map(|i| x.raw(i).clone()).collect();
                ZpPoly::from_residues(ring, coeffs)
            }
            Fiber::ModG { g, .. } => x.rem_monic(g),
        }
    }

    fn is_zero(&self, x: &ZpPoly) -> bool {
        match self {
            Fiber::ModP { .. } => x.is_zero(),
            Fiber::ModG { threshold, .. } => x.vanishes_to(*threshold),
        }
    }

    fn mul(&self, a: &ZpPoly, b: &ZpPoly) -> ZpPoly {
        self.reduce(a.mul(b))
    }

    fn describe(&self, x: &ZpPoly) -> String {
        match self {
            Fiber::ModP { .. } => match (0..=x.degree().unwrap_or(0)).find(|&i| !x.raw(i).is_zero()) {
                Some(k) => format!("resultant mod p has T-order {k}"),
                None => "resultant vanishes mod p".into(),
            },
            Fiber::ModG { .. } => match x.valuation().finite() {
                Some(v) if !self.is_zero(x) => format!("resultant mod prime has p-valuation {v}"),
                _ => "resultant vanishes mod prime".into(),
            },
        }
    }
}

/// Polynomials in S over a fiber domain, ascending and trimmed.
type SPoly = Vec<ZpPoly>;

fn trim(f: &Fiber, mut a: SPoly) -> SPoly {
    while a.last().is_some_and(|c| f.is_zero(c)) {
        a.pop();
    }
    a
}

/// Pseudo-division: `lc(b)^k a = q b + r` with `deg r < deg b`.
fn pseudo_divrem(f: &Fiber, a: &SPoly, b: &SPoly) -> (SPoly, SPoly) {
    let db = b.len() - 1;
    let lb = &b[db];
    let mut r = trim(f, a.clone());
    let mut q: SPoly = Vec::new();
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let lr = r[r.len() - 1].clone();
        q = q.iter().map(|c| f.mul(c, lb)).collect();
        if q.len() <= shift {
            q.resize(shift + 1, f.reduce(ZpPoly::zero(lb.ring())));
        }
        q[shift] = f.reduce(q[shift].add(&lr));
        let mut next: SPoly = r.iter().map(|c| f.mul(c, lb)).collect();
        for (i, c) in b.iter().enumerate() {
            next[shift + i] = f.reduce(next[shift + i].sub(&f.mul(&lr, c)));
        }
        next.pop();
        r = trim(f, next);
    }
    (trim(f, q), r)
}

/// `a * b mod h` for monic `h`.
fn mul_mod(f: &Fiber, a: &SPoly, b: &SPoly, h: &SPoly) -> SPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let zero = f.reduce(ZpPoly::zero(h[0].ring()));
    let mut prod = vec![zero; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            prod[i + j] = f.reduce(prod[i + j].add(&x.mul(y)));
        }
    }
    pseudo_divrem(f, &prod, h).1
}

fn s_poly_string(a: &SPoly) -> String {
    let terms: Vec<String> = a.iter().map(|c| c.to_string()).collect();
    format_s_poly(&terms)
}

fn format_s_poly(terms: &[String]) -> String {
    let mut parts = Vec::new();
    for (k, c) in terms.iter().enumerate().rev() {
        if c == "0" {
            continue;
        }
        let mono = match k {
            0 => String::new(),
            1 => "S".into(),
            _ => format!("S^{k}"),
        };
        let part = if k == 0 {
            c.clone()
        } else if c == "1" {
            mono
        } else if c == "-1" {
            format!("-{mono}")
        } else if c.contains(' ') {
            format!("({c})*{mono}")
        } else {
            format!("{c}*{mono}")
        };
        parts.push(part);
    }
    if parts.is_empty() {
        return "0".into();
    }
    let mut out = parts[0].clone();
    for p in &parts[1..] {
        match p.strip_prefix('-') {
            Some(rest) => {
                out.push_str(" - ");
                out.push_str(rest);
            }
            None => {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
    }
    out
}

/// Reducedness of the fiber `C/𝔭C`.
pub fn is_reduced_fiber(ext: &MonogenicExtension, prime: &HeightOnePrime) -> Result<FiberReport> {
    let fiber = Fiber::new(ext, prime)?;
    let res = fiber.embed(&ext.witness);
    let evidence = fiber.describe(&res);
    let report = |status, witness| FiberReport {
        prime: prime.clone(),
        status,
        evidence: evidence.clone(),
        witness,
        normality_assumed: true,
    };
    if !fiber.is_zero(&res) {
        return Ok(report(FiberStatus::Reduced, None));
    }

    let h: SPoly = trim(&fiber, ext.coeffs.iter().map(|c| fiber.embed(c)).collect());
    let dh: SPoly = trim(
        &fiber,
        h.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| fiber.mul(c, &fiber.reduce(ZpPoly::from_i64s(c.ring(), &[i as i64]))))
            .collect(),
    );
    if dh.is_empty() {
        return Ok(report(FiberStatus::Indeterminate, None));
    }
    let (mut a, mut b) = (h.clone(), dh);
    for _ in 0..=h.len() {
        if b.is_empty() {
            break;
        }
        let r = pseudo_divrem(&fiber, &a, &b).1;
        a = b;
        b = r;
    }
    if !b.is_empty() || a.len() < 2 {
        return Ok(report(FiberStatus::Indeterminate, None));
    }
    let (w, rem) = pseudo_divrem(&fiber, &h, &a);
    let w = pseudo_divrem(&fiber, &w, &h).1;
    if !rem.is_empty() || w.is_empty() {
        return Ok(report(FiberStatus::Indeterminate, None));
    }
    let mut power = w.clone();
    for _ in 1..h.len() {
        power = mul_mod(&fiber, &power, &w, &h);
        if power.is_empty() {
            return Ok(report(FiberStatus::NotReduced, Some(s_poly_string(&w))));
        }
    }
    Ok(report(FiberStatus::Indeterminate, None))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecializationFiber {
    Checked(FiberReport),
    /// `x_n` was degenerate or could not be certified prime.
    Skipped(String),
}

/// Fibers at a sequence of indexed primes, in index order.
pub fn check_fibers(
    ext: &MonogenicExtension,
    primes: Vec<(u32, Result<HeightOnePrime>)>,
) -> Result<Vec<(u32, SpecializationFiber)>> {
    primes
        .into_par_iter()
        .map(|(n, prime)| match prime {
            Ok(q) => Ok((n, SpecializationFiber::Checked(is_reduced_fiber(ext, &q)?))),
            Err(e) => Ok((n, SpecializationFiber::Skipped(e.to_string()))),
        })
        .collect()
}

/// Fibers at `(x_n)` for `n = 1..=n_max`. Indices where `x_n` is degenerate
/// or not certified irreducible are skipped with a notice.
pub fn enumerate_good_specializations(
    ext: &MonogenicExtension,
    fam: &SpecializationFamily,
    n_max: u32,
) -> Result<Vec<(u32, SpecializationFiber)>> {
    let primes = (1..=n_max)
        .map(|n| {
            let prime = element(fam, n).and_then(|x| {
                let g: DistinguishedPoly = x.prepared.distinguished;
                if g.is_certified_irreducible() {
                    Ok(HeightOnePrime::OutsideP(g))
                } else {
                    Err(Error::NotIrreducible(format!("{g} is not certified irreducible")))
                }
            });
            (n, prime)
        })
        .collect();
    check_fibers(ext, primes)
}

/// Λ-presentation of the C-module `C^k / rowspan(m)`: row `(i, l)` holds the
/// coordinates of `S^l * m_i` in the Λ-basis `e_j S^c`.
pub fn restrict_scalars(ext: &MonogenicExtension, m: &[Vec<Vec<PowerSeries>>]) -> Result<PresentationModule> {
    let k = m.len();
    let d = ext.degree();
    let ring = ext.ring();
    let dt = ext.t_precision();
    let zero = PowerSeries::zero(ring, dt);
    let mut rows = vec![vec![zero.clone(); k * d]; k * d];
    for (i, row) in m.iter().enumerate() {
        if row.len() != k {
            return Err(Error::NotSquare {
                rows: k,
                cols: row.len(),
            });
        }
        for (j, entry) in row.iter().enumerate() {
            let mut cur = reduce_mod_h(ext, entry)?;
            for l in 0..d {
                for (c, v) in cur.iter().enumerate() {
                    rows[i * d + l][j * d + c] = v.clone();
                }
                let mut shifted = vec![zero.clone()];
                shifted.extend(cur.iter().cloned());
                cur = reduce_mod_h(ext, &shifted)?;
            }
        }
    }
    PresentationModule::new(rows)
}

/// Remainder modulo the monic `h`, padded to length `deg h`.
fn reduce_mod_h(ext: &MonogenicExtension, a: &[PowerSeries]) -> Result<Vec<PowerSeries>> {
    let d = ext.degree();
    let mut r: Vec<PowerSeries> = a.to_vec();
    while r.len() > d {
        let lead = r.pop().expect("nonempty");
        let shift = r.len() - d;
        for i in 0..d {
            r[shift + i] = r[shift + i].sub(&lead.mul(&ext.coeffs[i])?)?;
        }
    }
    r.resize(d, PowerSeries::zero(ext.ring(), ext.t_precision()));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charideal::fitting_generator;
    use crate::specialize::{quotient_valuation, UnitRule};

    fn ring() -> Arc<PAdicRing> {
        PAdicRing::new(3, 40).unwrap()
    }

    fn s(c: &[i64]) -> PowerSeries {
        PowerSeries::from_i64s(&ring(), 64, c)
    }

    fn ext(coeffs: &[&[i64]]) -> MonogenicExtension {
        MonogenicExtension::new(coeffs.iter().map(|c| s(c)).collect()).unwrap()
    }

    fn dp(c: &[i64]) -> DistinguishedPoly {
        DistinguishedPoly::from_i64s(&ring(), c).unwrap()
    }

    fn labels(r: &RamificationReport) -> Vec<String> {
        r.primes.iter().map(|q| q.label(3)).collect()
    }

    #[test]
    fn resultant_examples() {
        let e = ext(&[&[0, -1], &[], &[1]]);
        let r = ramification_locus(&e).unwrap();
        assert_eq!(r.resultant, s(&[0, -4]));
        assert_eq!(labels(&r), vec!["(T)"]);

        let r = ramification_locus(&ext(&[&[-3], &[], &[1]])).unwrap();
        assert_eq!(r.resultant, s(&[-12]));
        assert_eq!(labels(&r), vec!["(3)"]);

        // Sylvester orientation gives -1 + 4T, an associate of 1 - 4T
        let r = ramification_locus(&ext(&[&[0, 1], &[1], &[1]])).unwrap();
        assert_eq!(r.resultant, s(&[-1, 4]));
        assert!(r.primes.is_empty());
    }

    #[test]
    fn inseparable_rejected() {
        let err = MonogenicExtension::new(vec![s(&[]), s(&[]), s(&[1])]).unwrap_err();
        assert_eq!(err, Error::InseparableAtPrecision);
        assert!(MonogenicExtension::new(vec![s(&[1]), s(&[2])]).is_err());
        assert!(MonogenicExtension::new(vec![s(&[1]), s(&[0]), s(&[2])]).is_err());
    }

    #[test]
    fn fiber_examples() {
        let e = ext(&[&[0, -1], &[], &[1]]);
        let r = is_reduced_fiber(&e, &HeightOnePrime::OutsideP(dp(&[3, 1]))).unwrap();
        assert_eq!(r.status, FiberStatus::Reduced);
        assert_eq!(r.evidence, "resultant mod prime has p-valuation 1");

        let r = is_reduced_fiber(&e, &HeightOnePrime::OutsideP(dp(&[0, 1]))).unwrap();
        assert_eq!(r.status, FiberStatus::NotReduced);
        assert_eq!(r.witness.as_deref(), Some("S"));

        let r = is_reduced_fiber(&e, &HeightOnePrime::OverP).unwrap();
        assert_eq!(r.status, FiberStatus::Reduced);
        assert_eq!(r.evidence, "resultant mod p has T-order 1");
        assert!(r.normality_assumed);
    }

    #[test]
    fn cubic_with_double_root_fiber() {
        // S^3 - 3S + T - 2 at T = 0 becomes (S - 2)(S + 1)^2, S + 1 nilpotent times (S - 2)
        let e = ext(&[&[-2, 1], &[-3], &[], &[1]]);
        let r = is_reduced_fiber(&e, &HeightOnePrime::OutsideP(dp(&[0, 1]))).unwrap();
        assert_eq!(r.status, FiberStatus::NotReduced);
    }

    #[test]
    fn enumerate_examples() {
        let e = ext(&[&[0, -1], &[], &[1]]);
        let fam = SpecializationFamily::outside_p(s(&[0, 1]), UnitRule::Const(1)).unwrap();
        let out = enumerate_good_specializations(&e, &fam, 6).unwrap();
        assert_eq!(out.len(), 6);
        for (_, f) in &out {
            assert!(matches!(f, SpecializationFiber::Checked(r) if r.status == FiberStatus::Reduced));
        }
        let bad = (1..=4)
            .map(|n| (n, Ok(HeightOnePrime::OutsideP(dp(&[0, 1])))))
            .collect();
        for (_, f) in check_fibers(&e, bad).unwrap() {
            assert!(matches!(f, SpecializationFiber::Checked(r) if r.status == FiberStatus::NotReduced));
        }
        let e = ext(&[&[0, 1], &[1], &[1]]);
        for (_, f) in enumerate_good_specializations(&e, &fam, 5).unwrap() {
            assert!(matches!(f, SpecializationFiber::Checked(r) if r.status == FiberStatus::Reduced));
        }
    }

    #[test]
    fn restrict_scalars_examples() {
        let e = ext(&[&[0, -1], &[], &[1]]);
        let m = restrict_scalars(&e, &[vec![vec![s(&[]), s(&[1])]]]).unwrap();
        assert_eq!(m.to_string(), "[0, 1; T, 0]");
        let m = restrict_scalars(&e, &[vec![vec![s(&[1])]]]).unwrap();
        assert_eq!(m.to_string(), "[1, 0; 0, 1]");
        let m = restrict_scalars(&e, &[vec![vec![s(&[0, 1])]]]).unwrap();
        assert_eq!(m.to_string(), "[T, 0; 0, T]");
        // S^2 reduces to T before flattening
        let m = restrict_scalars(&e, &[vec![vec![s(&[]), s(&[]), s(&[1])]]]).unwrap();
        assert_eq!(fitting_generator(&m), s(&[0, 0, 1]));
    }

    #[test]
    fn restricted_quotient_matches_hand_flattening() {
        let e = ext(&[&[0, -1], &[], &[1]]);
        let m = restrict_scalars(&e, &[vec![vec![s(&[]), s(&[1])]]]).unwrap();
        let hand = PresentationModule::new(vec![vec![s(&[]), s(&[1])], vec![s(&[0, 1]), s(&[])]]).unwrap();
        let fam = SpecializationFamily::outside_p(s(&[0, 1]), UnitRule::Const(2)).unwrap();
        for n in 1..5 {
            let x = element(&fam, n).unwrap();
            assert_eq!(
                quotient_valuation(&m, &x).unwrap().valuation,
                quotient_valuation(&hand, &x).unwrap().valuation
            );
        }
    }
}
