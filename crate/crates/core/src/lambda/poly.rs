use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::{convolve, format_poly, PowerSeries};
use crate::error::{Error, Result};
use crate::padic::{PAdicInt, PAdicRing, Valuation};

/// Polynomial over Z_p at capped precision. Trailing coefficients that
/// vanish at precision are trimmed, so `degree` is the index of the last
/// nonzero residue.
#[derive(Clone)]
pub struct ZpPoly {
    ring: Arc<PAdicRing>,
    coeffs: Vec<BigUint>,
}

impl ZpPoly {
    pub fn from_residues(ring: &Arc<PAdicRing>, mut coeffs: Vec<BigUint>) -> Self {
        for c in coeffs.iter_mut() {
            if &*c >= ring.modulus() {
                *c = ring.reduce(c);
            }
        }
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ZpPoly {
            ring: ring.clone(),
            coeffs,
        }
    }

    pub fn from_i64s(ring: &Arc<PAdicRing>, coeffs: &[i64]) -> Self {
        Self::from_residues(ring, coeffs.iter().map(|&c| ring.from_i64(c)).collect())
    }

    pub fn from_bigints(ring: &Arc<PAdicRing>, coeffs: &[BigInt]) -> Self {
        Self::from_residues(ring, coeffs.iter().map(|c| ring.from_bigint(c)).collect())
    }

    pub fn zero(ring: &Arc<PAdicRing>) -> Self {
        ZpPoly {
            ring: ring.clone(),
            coeffs: Vec::new(),
        }
    }

    pub fn one(ring: &Arc<PAdicRing>) -> Self {
        Self::from_residues(ring, vec![BigUint::one()])
    }

    /// `T^k`.
    pub fn t_pow(ring: &Arc<PAdicRing>, k: usize) -> Self {
        let mut coeffs = vec![BigUint::zero(); k + 1];
        coeffs[k] = BigUint::one();
        ZpPoly {
            ring: ring.clone(),
            coeffs,
        }
    }

    /// `T - a`.
    pub fn linear(ring: &Arc<PAdicRing>, root: &BigUint) -> Self {
        Self::from_residues(ring, vec![ring.neg(root), BigUint::one()])
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        &self.ring
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> PAdicInt {
        PAdicInt::new(&self.ring, self.raw(i).clone())
    }

    pub(crate) fn raw(&self, i: usize) -> &BigUint {
        static ZERO: std::sync::OnceLock<BigUint> = std::sync::OnceLock::new();
        self.coeffs.get(i).unwrap_or_else(|| ZERO.get_or_init(BigUint::zero))
    }

    pub fn balanced_coeffs(&self) -> Vec<BigInt> {
        self.coeffs.iter().map(|c| self.ring.balanced(c)).collect()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    /// Minimal coefficient valuation.
    pub fn valuation(&self) -> Valuation {
        self.coeffs
            .iter()
            .map(|c| self.ring.valuation(c))
            .min()
            .unwrap_or(Valuation::Vanishing)
    }

    /// True when every coefficient has valuation at least `threshold`.
    pub fn vanishes_to(&self, threshold: u32) -> bool {
        self.coeffs
            .iter()
            .all(|c| self.ring.valuation(c).capped(self.ring.precision()) >= threshold)
    }

    fn align(&self, other: &ZpPoly) -> (Arc<PAdicRing>, Vec<BigUint>, Vec<BigUint>) {
        assert_eq!(self.ring.prime(), other.ring.prime(), "mixing different primes");
        if self.ring.same_as(&other.ring) {
            return (self.ring.clone(), self.coeffs.clone(), other.coeffs.clone());
        }
        let ring = if self.ring.precision() < other.ring.precision() {
            self.ring.clone()
        } else {
            other.ring.clone()
        };
        let a = self.coeffs.iter().map(|c| ring.reduce(c)).collect();
        let b = other.coeffs.iter().map(|c| ring.reduce(c)).collect();
        (ring, a, b)
    }

    pub fn add(&self, other: &ZpPoly) -> ZpPoly {
        let (ring, mut a, b) = self.align(other);
        if a.len() < b.len() {
            a.resize(b.len(), BigUint::zero());
        }
        for (i, c) in b.iter().enumerate() {
            a[i] = ring.add(&a[i], c);
        }
        ZpPoly::from_residues(&ring, a)
    }

    pub fn sub(&self, other: &ZpPoly) -> ZpPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ZpPoly {
        ZpPoly {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|c| self.ring.neg(c)).collect(),
        }
    }

    pub fn mul(&self, other: &ZpPoly) -> ZpPoly {
        let (ring, a, b) = self.align(other);
        if a.is_empty() || b.is_empty() {
            return ZpPoly::zero(&ring);
        }
        let len = a.len() + b.len() - 1;
        ZpPoly::from_residues(&ring, convolve(&ring, &a, &b, len))
    }

    pub fn pow(&self, e: u32) -> ZpPoly {
        let mut acc = ZpPoly::one(&self.ring);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn scale(&self, c: &BigUint) -> ZpPoly {
        ZpPoly::from_residues(&self.ring, self.coeffs.iter().map(|a| self.ring.mul(a, c)).collect())
    }

    /// Division by a monic polynomial: `self = q * divisor + r`, `deg r < deg divisor`.
    pub fn div_rem_monic(&self, divisor: &ZpPoly) -> (ZpPoly, ZpPoly) {
        assert!(divisor.is_monic(), "divisor must be monic");
        let (ring, mut rem, d) = self.align(divisor);
        let dd = d.len() - 1;
        if rem.len() <= dd {
            return (ZpPoly::zero(&ring), ZpPoly::from_residues(&ring, rem));
        }
        let mut quot = vec![BigUint::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let lead = std::mem::take(&mut rem[k + dd]);
            if lead.is_zero() {
                continue;
            }
            for (j, dj) in d.iter().enumerate().take(dd) {
                if !dj.is_zero() {
                    rem[k + j] = ring.sub_mul(&rem[k + j], &lead, dj);
                }
            }
            quot[k] = lead;
        }
        rem.truncate(dd);
        (ZpPoly::from_residues(&ring, quot), ZpPoly::from_residues(&ring, rem))
    }

    pub fn rem_monic(&self, divisor: &ZpPoly) -> ZpPoly {
        self.div_rem_monic(divisor).1
    }

    pub fn derivative(&self) -> ZpPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| self.ring.mul(c, &self.ring.from_i64(i as i64)))
            .collect();
        ZpPoly::from_residues(&self.ring, coeffs)
    }

    /// Horner evaluation at a residue.
    pub fn eval(&self, x: &BigUint) -> BigUint {
        let mut acc = BigUint::zero();
        for c in self.coeffs.iter().rev() {
            acc = self.ring.add(&self.ring.mul(&acc, x), c);
        }
        acc
    }

    pub fn to_series(&self, t_precision: usize) -> Result<PowerSeries> {
        if self.coeffs.len() > t_precision {
            return Err(Error::DegreeCapExceeded { cap: t_precision });
        }
        Ok(PowerSeries::from_residues(&self.ring, t_precision, self.coeffs.clone()))
    }

    pub fn reduce_precision(&self, target: &Arc<PAdicRing>) -> ZpPoly {
        assert!(target.precision() <= self.ring.precision());
        ZpPoly::from_residues(target, self.coeffs.iter().map(|c| target.reduce(c)).collect())
    }

    /// Move to another ring of the same prime via balanced representatives.
    pub fn transfer(&self, target: &Arc<PAdicRing>) -> ZpPoly {
        ZpPoly::from_residues(
            target,
            self.coeffs.iter().map(|c| self.ring.transfer(c, target)).collect(),
        )
    }
}

impl PartialEq for ZpPoly {
    fn eq(&self, other: &Self) -> bool {
        self.ring.same_as(&other.ring) && self.coeffs == other.coeffs
    }
}

impl Eq for ZpPoly {}

impl fmt::Debug for ZpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self, self.ring.prime(), self.ring.precision())
    }
}

impl fmt::Display for ZpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_poly(&self.balanced_coeffs(), "T"))
    }
}

/// Monic polynomial whose lower coefficients all lie in `pZ_p`.
#[derive(Clone, PartialEq, Eq)]
pub struct DistinguishedPoly(ZpPoly);

impl DistinguishedPoly {
    pub fn new(poly: ZpPoly) -> Result<Self> {
        if !poly.is_monic() {
            return Err(Error::NotDistinguished(format!("{poly} is not monic")));
        }
        let deg = poly.degree().unwrap_or(0);
        let ring = poly.ring.clone();
        if let Some(i) = (0..deg).find(|&i| ring.is_unit(poly.raw(i))) {
            return Err(Error::NotDistinguished(format!(
                "{poly} has a unit coefficient at T^{i}"
            )));
        }
        Ok(DistinguishedPoly(poly))
    }

    pub fn from_i64s(ring: &Arc<PAdicRing>, coeffs: &[i64]) -> Result<Self> {
        Self::new(ZpPoly::from_i64s(ring, coeffs))
    }

    pub fn one(ring: &Arc<PAdicRing>) -> Self {
        DistinguishedPoly(ZpPoly::one(ring))
    }

    /// `T`.
    pub fn t(ring: &Arc<PAdicRing>) -> Self {
        DistinguishedPoly(ZpPoly::t_pow(ring, 1))
    }

    pub fn degree(&self) -> usize {
        self.0.degree().unwrap_or(0)
    }

    pub fn as_poly(&self) -> &ZpPoly {
        &self.0
    }

    pub fn into_poly(self) -> ZpPoly {
        self.0
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        &self.0.ring
    }

    pub fn coeff(&self, i: usize) -> PAdicInt {
        self.0.coeff(i)
    }

    pub fn to_series(&self, t_precision: usize) -> Result<PowerSeries> {
        self.0.to_series(t_precision)
    }

    pub fn mul(&self, other: &DistinguishedPoly) -> DistinguishedPoly {
        DistinguishedPoly(self.0.mul(&other.0))
    }

    pub fn pow(&self, e: u32) -> DistinguishedPoly {
        DistinguishedPoly(self.0.pow(e))
    }

    pub fn reduce_precision(&self, target: &Arc<PAdicRing>) -> DistinguishedPoly {
        DistinguishedPoly(self.0.reduce_precision(target))
    }

    pub fn transfer(&self, target: &Arc<PAdicRing>) -> DistinguishedPoly {
        DistinguishedPoly(self.0.transfer(target))
    }

    /// Equality of the underlying polynomials at the lower of the two precisions.
    pub fn same_prime_ideal(&self, other: &DistinguishedPoly) -> bool {
        let (_, a, b) = self.0.align(&other.0);
        let trim = |mut v: Vec<BigUint>| {
            while v.last().is_some_and(|c| c.is_zero()) {
                v.pop();
            }
            v
        };
        trim(a) == trim(b)
    }
}

impl fmt::Debug for DistinguishedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Distinguished({:?})", self.0)
    }
}

impl fmt::Display for DistinguishedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Arc<PAdicRing> {
        PAdicRing::new(3, 40).unwrap()
    }

    #[test]
    fn long_division() {
        let r = ring();
        let g = ZpPoly::from_i64s(&r, &[3, 0, 1]);
        let f = ZpPoly::from_i64s(&r, &[3, 1]);
        let (q, rem) = g.div_rem_monic(&f);
        assert_eq!(q, ZpPoly::from_i64s(&r, &[-3, 1]));
        assert_eq!(rem, ZpPoly::from_i64s(&r, &[12]));
    }

    #[test]
    fn distinguished_validation() {
        let r = ring();
        assert!(DistinguishedPoly::from_i64s(&r, &[3, 3, 1]).is_ok());
        assert!(DistinguishedPoly::from_i64s(&r, &[0, 1]).is_ok());
        assert!(DistinguishedPoly::from_i64s(&r, &[1]).is_ok());
        assert!(matches!(
            DistinguishedPoly::from_i64s(&r, &[1, 1]),
            Err(Error::NotDistinguished(_))
        ));
        assert!(matches!(
            DistinguishedPoly::from_i64s(&r, &[3, 2]),
            Err(Error::NotDistinguished(_))
        ));
    }

    #[test]
    fn derivative_and_eval() {
        let r = ring();
        let f = ZpPoly::from_i64s(&r, &[-3, -2, 1]);
        assert_eq!(f.derivative(), ZpPoly::from_i64s(&r, &[-2, 2]));
        assert!(f.eval(&r.from_i64(3)).is_zero());
        assert!(f.eval(&r.from_i64(-1)).is_zero());
    }
}
