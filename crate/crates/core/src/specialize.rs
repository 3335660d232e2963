//! Specialization families and the orders of the quotients `M/xM`.
//!
//! `Λ/(x)` is free of rank `d = deg f0` over Z_p when `x = u * f0` has no
//! p-power part, so `M/xM` for `M = Λ^k / rowspan(A)` is the cokernel of an
//! `(k d) x (k d)` matrix over Z_p: row `(i, l)` holds the coordinates of
//! `T^l * A_i mod f0` in the basis `e_j T^m`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charideal::PresentationModule;
use crate::error::{Error, Result};
use crate::lambda::{poly_multiplicity, weierstrass_prepare, DistinguishedPoly, PowerSeries, WeierstrassData, ZpPoly};
use crate::padic::{PAdicMatrix, PAdicRing};

/// Extra digits kept above the largest expected valuation.
pub const PRECISION_MARGIN: u32 = 5;

/// Upper bound for automatic precision raising.
pub const MAX_AUTO_PRECISION: u32 = 640;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// `x_n = z + a_n p^n`.
    OutsideP,
    /// `x_n = z^n + r + a_n p`.
    OverP,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::OutsideP => "outside-p",
            FamilyKind::OverP => "over-p",
        })
    }
}

/// Rule producing the unit `a_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitRule {
    Const(u64),
    /// Small units drawn from a ChaCha stream keyed by the seed and `n`.
    Seeded(u64),
}

impl UnitRule {
    pub fn unit(&self, prime: u32, n: u32) -> Result<u64> {
        match *self {
            UnitRule::Const(k) if k % prime as u64 == 0 => Err(Error::InvalidConfig(format!(
                "constant unit {k} is divisible by {prime}"
            ))),
            UnitRule::Const(k) => Ok(k),
            UnitRule::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(n as u64);
                let bound = (prime as u64).pow(2);
                loop {
                    let a = rng.gen_range(1..bound);
                    if a % prime as u64 != 0 {
                        return Ok(a);
                    }
                }
            }
        }
    }
}

impl fmt::Display for UnitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitRule::Const(k) => write!(f, "const:{k}"),
            UnitRule::Seeded(s) => write!(f, "seed:{s}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpecializationFamily {
    pub kind: FamilyKind,
    pub z: PowerSeries,
    /// Only used by [`FamilyKind::OverP`].
    pub r: PowerSeries,
    pub units: UnitRule,
    z_degree: usize,
}

impl SpecializationFamily {
    /// The family `z + a_n p^n`.
    pub fn outside_p(z: PowerSeries, units: UnitRule) -> Result<Self> {
        let r = PowerSeries::zero(z.ring(), z.t_precision());
        Self::build(FamilyKind::OutsideP, z, r, units)
    }

    /// The family `z^n + r + a_n p`.
    pub fn over_p(z: PowerSeries, r: PowerSeries, units: UnitRule) -> Result<Self> {
        Self::build(FamilyKind::OverP, z, r, units)
    }

    fn build(kind: FamilyKind, z: PowerSeries, r: PowerSeries, units: UnitRule) -> Result<Self> {
        let prepared = weierstrass_prepare(&z)?;
        if prepared.lambda() == 0 {
            return Err(Error::InvalidConfig(format!(
                "z = {z} has trivial distinguished part, so (p, z) is not a parameter ideal"
            )));
        }
        if !r.ring().same_as(z.ring()) || r.t_precision() != z.t_precision() {
            return Err(Error::IncompatiblePrecision {
                left: z.ring().describe(),
                right: r.ring().describe(),
            });
        }
        Ok(SpecializationFamily {
            kind,
            z,
            r,
            units,
            z_degree: prepared.lambda(),
        })
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        self.z.ring()
    }

    /// Degree of the distinguished part of `z`.
    pub fn z_degree(&self) -> usize {
        self.z_degree
    }

    /// The same family at another precision, via balanced lifts.
    pub fn transfer(&self, ring: &Arc<PAdicRing>, t_precision: usize) -> SpecializationFamily {
        SpecializationFamily {
            kind: self.kind,
            z: self.z.transfer(ring, t_precision),
            r: self.r.transfer(ring, t_precision),
            units: self.units,
            z_degree: self.z_degree,
        }
    }

    /// Smallest p-precision at which `x_n` is represented faithfully.
    fn precision_floor(&self, n: u32) -> u32 {
        match self.kind {
            FamilyKind::OutsideP => n + PRECISION_MARGIN,
            FamilyKind::OverP => PRECISION_MARGIN + 1,
        }
    }

    /// Smallest T-precision at which `x_n` is represented faithfully.
    fn t_precision_floor(&self, n: u32) -> usize {
        let z_deg = self.z.degree().unwrap_or(0);
        let r_deg = self.r.degree().unwrap_or(0);
        match self.kind {
            FamilyKind::OutsideP => z_deg + 1,
            FamilyKind::OverP => (z_deg * n as usize).max(r_deg) + 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpecializationElement {
    pub n: u32,
    pub x: PowerSeries,
    pub prepared: WeierstrassData,
}

impl SpecializationElement {
    pub fn distinguished(&self) -> &DistinguishedPoly {
        &self.prepared.distinguished
    }
}

/// `x_n` of the family, Weierstrass-prepared.
pub fn element(fam: &SpecializationFamily, n: u32) -> Result<SpecializationElement> {
    if n == 0 {
        return Err(Error::InvalidConfig("specialization index starts at 1".into()));
    }
    let ring = fam.ring();
    let d = fam.z.t_precision();
    let a = fam.units.unit(ring.prime(), n)? as i64;
    let degenerate = |reason: &str| Error::DegenerateSpecialization {
        n,
        reason: reason.into(),
    };
    let x = match fam.kind {
        FamilyKind::OutsideP => {
            if n >= ring.precision() {
                return Err(degenerate("p^n vanishes at working precision"));
            }
            fam.z.add(&PowerSeries::constant(ring, d, a).mul_p_pow(n))?
        }
        FamilyKind::OverP => {
            if fam.t_precision_floor(n) > d {
                return Err(degenerate("z^n exceeds the T-precision"));
            }
            fam.z
                .pow(n)?
                .add(&fam.r)?
                .add(&PowerSeries::constant(ring, d, a).mul_p_pow(1))?
        }
    };
    if x.is_zero_at_precision() {
        return Err(degenerate("x vanishes at working precision"));
    }
    if x.is_unit() {
        return Err(degenerate("x is a unit"));
    }
    let prepared = weierstrass_prepare(&x)?;
    if prepared.mu > 0 {
        return Err(degenerate("x lies in (p)"));
    }
    Ok(SpecializationElement { n, x, prepared })
}

/// `z = target`, which lies in `(target)` and in no other listed prime.
pub fn select_base_outside_p(
    target: &DistinguishedPoly,
    avoid: &[DistinguishedPoly],
    t_precision: usize,
) -> Result<PowerSeries> {
    if avoid.iter().any(|g| g.same_prime_ideal(target)) {
        return Err(Error::AvoidanceImpossible);
    }
    target.to_series(t_precision)
}

/// Over Λ the only prime over p is `(p)` itself, so `r = 0`.
pub fn select_r_over_p(ring: &Arc<PAdicRing>, t_precision: usize) -> PowerSeries {
    PowerSeries::zero(ring, t_precision)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientReport {
    /// `log_p |M/xM|`, absent when the elimination was not certified.
    pub valuation: Option<u64>,
    /// Z_p-rank of the flattened presentation.
    pub basis_rank: usize,
    pub certified: bool,
    pub precision: u32,
}

impl fmt::Display for QuotientReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.valuation {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("not-finite-at-precision"),
        }
    }
}

/// `log_p |M/xM|` from the elementary divisors of the flattened presentation.
pub fn quotient_valuation(m: &PresentationModule, x: &SpecializationElement) -> Result<QuotientReport> {
    let f0 = x.distinguished().as_poly();
    if !m.ring().same_as(f0.ring()) {
        return Err(Error::IncompatiblePrecision {
            left: m.ring().describe(),
            right: f0.ring().describe(),
        });
    }
    let divisors = relation_matrix(m, f0).elementary_divisors();
    Ok(QuotientReport {
        valuation: divisors.total(),
        basis_rank: m.size() * f0.degree().unwrap_or(0),
        certified: divisors.certified,
        precision: divisors.precision,
    })
}

/// Z_p relation matrix of `M/xM` in the basis `e_j T^m`, `m < deg f0`.
pub fn relation_matrix(m: &PresentationModule, f0: &ZpPoly) -> PAdicMatrix {
    let ring = f0.ring().clone();
    let d = f0.degree().unwrap_or(0);
    let k = m.size();
    let mut out = PAdicMatrix::zeros(&ring, k * d, k * d);
    for i in 0..k {
        for j in 0..k {
            let reduced = m.entry(i, j).to_poly().rem_monic(f0);
            let mut cur: Vec<BigUint> = (0..d).map(|c| reduced.raw(c).clone()).collect();
            for l in 0..d {
                for (c, v) in cur.iter().enumerate() {
                    out.set_raw(i * d + l, j * d + c, v.clone());
                }
                if l + 1 < d {
                    cur = mul_t_mod(&ring, &cur, f0);
                }
            }
        }
    }
    out
}

/// `T * c mod f0` on coefficient vectors of length `deg f0`.
fn mul_t_mod(ring: &PAdicRing, c: &[BigUint], f0: &ZpPoly) -> Vec<BigUint> {
    let d = c.len();
    let top = c[d - 1].clone();
    let mut out = Vec::with_capacity(d);
    out.push(BigUint::zero());
    out.extend_from_slice(&c[..d - 1]);
    if !top.is_zero() {
        for (k, o) in out.iter_mut().enumerate() {
            *o = ring.sub_mul(o, &top, f0.raw(k));
        }
    }
    out
}

/// Quotient valuation at `x_n`, raising the working precision until the
/// elimination is certified or [`MAX_AUTO_PRECISION`] is reached.
pub fn quotient_valuation_at(
    m: &PresentationModule,
    fam: &SpecializationFamily,
    n: u32,
) -> Result<(SpecializationElement, QuotientReport)> {
    let mut precision = m.ring().precision().max(fam.precision_floor(n));
    let t_precision = m.t_precision().max(fam.t_precision_floor(n));
    loop {
        let (m2, fam2);
        let (m_ref, fam_ref) = if precision == m.ring().precision() && t_precision == m.t_precision() {
            (m, fam)
        } else {
            let ring = PAdicRing::new(m.ring().prime(), precision)?;
            m2 = m.transfer(&ring, t_precision)?;
            fam2 = fam.transfer(&ring, t_precision);
            (&m2, &fam2)
        };
        let x = element(fam_ref, n)?;
        let report = quotient_valuation(m_ref, &x)?;
        if report.certified || precision >= MAX_AUTO_PRECISION {
            return Ok((x, report));
        }
        precision = (precision * 2).min(MAX_AUTO_PRECISION);
    }
}

/// Both sides of the length formula for a fundamental module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthFormula {
    pub direct: Option<u64>,
    pub assembled: Option<u64>,
}

impl LengthFormula {
    pub fn holds(&self) -> bool {
        self.direct.is_some() && self.direct == self.assembled
    }
}

/// Compare `log_p |M/xM|` with `Σ e_i log_p |Λ/(p, x)| + Σ f_i log_p |Λ/(g_i, x)|`.
pub fn length_formula_check(m: &PresentationModule, x: &SpecializationElement) -> Result<LengthFormula> {
    let data = m
        .fundamental_data()
        .ok_or_else(|| Error::InvalidConfig("length formula needs a fundamental module".into()))?;
    if x.prepared.mu > 0 {
        return Err(Error::PrimeNotAvoided("x lies in (p)".into()));
    }
    let ring = m.ring();
    let d = m.t_precision();
    for (g, _) in &data.outside_p {
        if poly_multiplicity(&x.x.to_poly(), g)? > 0 {
            return Err(Error::PrimeNotAvoided(format!("{g} divides x")));
        }
    }
    let direct = quotient_valuation(m, x)?.valuation;
    let mut assembled = Some(0u64);
    let mut accumulate = |module: PresentationModule, weight: u32| -> Result<()> {
        let part = quotient_valuation(&module, x)?.valuation;
        assembled = match (assembled, part) {
            (Some(a), Some(b)) => Some(a + weight as u64 * b),
            _ => None,
        };
        Ok(())
    };
    let over_p: u32 = data.over_p.iter().sum();
    if over_p > 0 {
        accumulate(
            PresentationModule::diagonal(vec![PowerSeries::constant(ring, d, ring.prime() as i64)])?,
            over_p,
        )?;
    }
    for (g, f) in &data.outside_p {
        accumulate(PresentationModule::diagonal(vec![g.to_series(d)?])?, *f)?;
    }
    Ok(LengthFormula { direct, assembled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charideal::fundamental_module;

    fn ring() -> Arc<PAdicRing> {
        PAdicRing::new(3, 40).unwrap()
    }

    fn s(c: &[i64]) -> PowerSeries {
        PowerSeries::from_i64s(&ring(), 64, c)
    }

    fn dp(c: &[i64]) -> DistinguishedPoly {
        DistinguishedPoly::from_i64s(&ring(), c).unwrap()
    }

    fn diag(entries: &[&[i64]]) -> PresentationModule {
        PresentationModule::diagonal(entries.iter().map(|c| s(c)).collect()).unwrap()
    }

    fn lfam(z: &[i64], a: u64) -> SpecializationFamily {
        SpecializationFamily::outside_p(s(z), UnitRule::Const(a)).unwrap()
    }

    fn efam(z: &[i64]) -> SpecializationFamily {
        SpecializationFamily::over_p(s(z), s(&[]), UnitRule::Const(1)).unwrap()
    }

    #[test]
    fn element_examples() {
        assert_eq!(element(&lfam(&[0, 1], 1), 2).unwrap().x, s(&[9, 1]));
        assert_eq!(element(&efam(&[0, 1]), 3).unwrap().x, s(&[3, 0, 0, 1]));
        assert_eq!(element(&lfam(&[0, 0, 1], 2), 1).unwrap().x, s(&[6, 0, 1]));
    }

    #[test]
    fn element_rejects_degenerate_input() {
        let fam = lfam(&[0, 1], 1);
        assert!(matches!(
            element(&fam, 40),
            Err(Error::DegenerateSpecialization { n: 40, .. })
        ));
        assert!(matches!(element(&fam, 0), Err(Error::InvalidConfig(_))));
        assert!(matches!(element(&lfam(&[0, 1], 3), 1), Err(Error::InvalidConfig(_))));
        // z = 3T: x_1 = 3T + 3 lies in (p)
        let fam = SpecializationFamily::outside_p(s(&[0, 3]), UnitRule::Const(1)).unwrap();
        assert!(matches!(element(&fam, 1), Err(Error::DegenerateSpecialization { .. })));
        assert!(SpecializationFamily::outside_p(s(&[1, 1]), UnitRule::Const(1)).is_err());
    }

    #[test]
    fn seeded_units_are_deterministic_units() {
        let rule = UnitRule::Seeded(7);
        for n in 1..30 {
            let a = rule.unit(5, n).unwrap();
            assert_ne!(a % 5, 0);
            assert_eq!(a, rule.unit(5, n).unwrap());
        }
    }

    #[test]
    fn base_selection() {
        assert_eq!(
            select_base_outside_p(&dp(&[0, 1]), &[dp(&[3, 1])], 64).unwrap(),
            s(&[0, 1])
        );
        assert_eq!(
            select_base_outside_p(&dp(&[3, 1]), &[dp(&[0, 1]), dp(&[3, 3, 1])], 64).unwrap(),
            s(&[3, 1])
        );
        assert_eq!(
            select_base_outside_p(&dp(&[0, 1]), &[dp(&[0, 1])], 64).unwrap_err(),
            Error::AvoidanceImpossible
        );
        assert!(select_r_over_p(&ring(), 64).is_zero_at_precision());
        assert!(select_r_over_p(&PAdicRing::new(7, 20).unwrap(), 8).is_zero_at_precision());
    }

    #[test]
    fn quotient_examples() {
        let x = element(&lfam(&[0, 1], 2), 3).unwrap();
        assert_eq!(x.x, s(&[54, 1]));
        assert_eq!(quotient_valuation(&diag(&[&[0, 0, 1]]), &x).unwrap().valuation, Some(6));
        let x = element(&lfam(&[0, 1], 1), 2).unwrap();
        assert_eq!(quotient_valuation(&diag(&[&[0, 0, 1]]), &x).unwrap().valuation, Some(4));
        assert_eq!(quotient_valuation(&diag(&[&[9]]), &x).unwrap().valuation, Some(2));
        let x = element(&efam(&[0, 1]), 3).unwrap();
        let report = quotient_valuation(&diag(&[&[3]]), &x).unwrap();
        assert_eq!(report.valuation, Some(3));
        assert_eq!(report.basis_rank, 3);
    }

    #[test]
    fn non_diagonal_presentation() {
        // [[T, 3], [0, T]] at x = T + 9: det T^2 gives 4 digits
        let m = PresentationModule::new(vec![vec![s(&[0, 1]), s(&[3])], vec![s(&[]), s(&[0, 1])]]).unwrap();
        let x = element(&lfam(&[0, 1], 1), 2).unwrap();
        assert_eq!(quotient_valuation(&m, &x).unwrap().valuation, Some(4));
    }

    #[test]
    fn precision_is_raised_when_needed() {
        let small = PAdicRing::new(3, 12).unwrap();
        let m = PresentationModule::diagonal(vec![PowerSeries::from_i64s(&small, 16, &[0, 0, 0, 1])]).unwrap();
        let fam = SpecializationFamily::outside_p(PowerSeries::t(&small, 16), UnitRule::Const(1)).unwrap();
        let (_, report) = quotient_valuation_at(&m, &fam, 9).unwrap();
        assert_eq!(report.valuation, Some(27));
        assert!(report.precision > 27);
    }

    #[test]
    fn length_formula_examples() {
        let r = ring();
        let m = fundamental_module(&r, 64, &[1], &[(dp(&[0, 1]), 1)]).unwrap();
        let x = element(&lfam(&[0, 1], 1), 2).unwrap();
        let lf = length_formula_check(&m, &x).unwrap();
        assert_eq!((lf.direct, lf.assembled), (Some(3), Some(3)));

        let m = fundamental_module(&r, 64, &[], &[(dp(&[0, 1]), 1)]).unwrap();
        let x = element(&lfam(&[0, 1], 1), 1).unwrap();
        assert!(length_formula_check(&m, &x).unwrap().holds());

        let m = fundamental_module(&r, 64, &[], &[]).unwrap();
        let lf = length_formula_check(&m, &x).unwrap();
        assert_eq!((lf.direct, lf.assembled), (Some(0), Some(0)));

        let m = fundamental_module(&r, 64, &[], &[(dp(&[3, 1]), 1)]).unwrap();
        let x = element(&lfam(&[0, 1], 1), 1).unwrap();
        assert!(matches!(length_formula_check(&m, &x), Err(Error::PrimeNotAvoided(_))));
    }
}
