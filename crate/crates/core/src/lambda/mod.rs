//! The Iwasawa algebra Λ = Z_p[[T]] truncated at T-degree `D`.
//!
//! A [`PowerSeries`] stores the coefficients of `T^0 .. T^(D-1)`, each known
//! modulo `p^N`. Series built from literals and products of low-degree
//! entries are polynomials, and the preparation and division routines
//! treat the stored coefficients as a polynomial of degree `< D`.

mod factor;
mod poly;
mod weierstrass;

pub use factor::{factor_distinguished, newton_polygon, Factorization, Irreducibility, IrreducibleFactor};
pub use poly::{DistinguishedPoly, ZpPoly};
pub(crate) use weierstrass::poly_multiplicity;
pub use weierstrass::{multiplicity, weierstrass_divide, weierstrass_prepare, WeierstrassData, DIVISIBILITY_SLACK};

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::padic::{PAdicInt, PAdicRing, Valuation};

/// Default number of T-coefficients carried by every series.
pub const DEFAULT_T_PRECISION: usize = 64;

#[derive(Clone)]
pub struct PowerSeries {
    ring: Arc<PAdicRing>,
    coeffs: Vec<BigUint>,
}

impl PowerSeries {
    pub fn zero(ring: &Arc<PAdicRing>, t_precision: usize) -> Self {
        PowerSeries {
            ring: ring.clone(),
            coeffs: vec![BigUint::zero(); t_precision],
        }
    }

    pub fn one(ring: &Arc<PAdicRing>, t_precision: usize) -> Self {
        Self::constant(ring, t_precision, 1)
    }

    pub fn constant(ring: &Arc<PAdicRing>, t_precision: usize, c: i64) -> Self {
        let mut s = Self::zero(ring, t_precision);
        if t_precision > 0 {
            s.coeffs[0] = ring.from_i64(c);
        }
        s
    }

    /// The variable `T`.
    pub fn t(ring: &Arc<PAdicRing>, t_precision: usize) -> Self {
        Self::monomial(ring, t_precision, 1, 1)
    }

    pub fn monomial(ring: &Arc<PAdicRing>, t_precision: usize, c: i64, degree: usize) -> Self {
        let mut s = Self::zero(ring, t_precision);
        if degree < t_precision {
            s.coeffs[degree] = ring.from_i64(c);
        }
        s
    }

    /// Coefficients in ascending degree; terms at or beyond `t_precision`
    /// are dropped.
    pub fn from_i64s(ring: &Arc<PAdicRing>, t_precision: usize, coeffs: &[i64]) -> Self {
        let mut s = Self::zero(ring, t_precision);
        for (i, &c) in coeffs.iter().enumerate().take(t_precision) {
            s.coeffs[i] = ring.from_i64(c);
        }
        s
    }

    pub fn from_bigints(ring: &Arc<PAdicRing>, t_precision: usize, coeffs: &[BigInt]) -> Self {
        let mut s = Self::zero(ring, t_precision);
        for (i, c) in coeffs.iter().enumerate().take(t_precision) {
            s.coeffs[i] = ring.from_bigint(c);
        }
        s
    }

    pub(crate) fn from_residues(ring: &Arc<PAdicRing>, t_precision: usize, mut coeffs: Vec<BigUint>) -> Self {
        coeffs.resize(t_precision, BigUint::zero());
        PowerSeries {
            ring: ring.clone(),
            coeffs,
        }
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        &self.ring
    }

    pub fn prime(&self) -> u32 {
        self.ring.prime()
    }

    pub fn p_precision(&self) -> u32 {
        self.ring.precision()
    }

    pub fn t_precision(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, i: usize) -> PAdicInt {
        PAdicInt::new(&self.ring, self.raw_coeff(i).clone())
    }

    pub(crate) fn raw_coeff(&self, i: usize) -> &BigUint {
        static ZERO: std::sync::OnceLock<BigUint> = std::sync::OnceLock::new();
        self.coeffs.get(i).unwrap_or_else(|| ZERO.get_or_init(BigUint::zero))
    }

    pub(crate) fn raw_coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// Balanced integer representatives of all stored coefficients.
    pub fn balanced_coeffs(&self) -> Vec<BigInt> {
        self.coeffs.iter().map(|c| self.ring.balanced(c)).collect()
    }

    pub fn is_unit(&self) -> bool {
        self.coeffs.first().is_some_and(|c| self.ring.is_unit(c))
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Largest index with a nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    /// Minimal valuation over all coefficients.
    pub fn valuation(&self) -> Valuation {
        self.coeffs
            .iter()
            .map(|c| self.ring.valuation(c))
            .min()
            .unwrap_or(Valuation::Vanishing)
    }

    /// Least index of a zero-at-precision-free coefficient, i.e. the T-order.
    pub fn t_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    fn check_compatible(&self, other: &PowerSeries) -> Result<()> {
        if !self.ring.same_as(&other.ring) || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::IncompatiblePrecision {
                left: format!("{} / T^{}", self.ring.describe(), self.coeffs.len()),
                right: format!("{} / T^{}", other.ring.describe(), other.coeffs.len()),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PowerSeries) -> Result<PowerSeries> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| self.ring.add(a, b))
            .collect();
        Ok(PowerSeries {
            ring: self.ring.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, other: &PowerSeries) -> Result<PowerSeries> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| self.ring.sub(a, b))
            .collect();
        Ok(PowerSeries {
            ring: self.ring.clone(),
            coeffs,
        })
    }

    pub fn neg(&self) -> PowerSeries {
        PowerSeries {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|c| self.ring.neg(c)).collect(),
        }
    }

    /// Cauchy product truncated at `T^D`.
    pub fn mul(&self, other: &PowerSeries) -> Result<PowerSeries> {
        self.check_compatible(other)?;
        let d = self.coeffs.len();
        Ok(PowerSeries {
            ring: self.ring.clone(),
            coeffs: convolve(&self.ring, &self.coeffs, &other.coeffs, d),
        })
    }

    pub fn pow(&self, mut e: u32) -> Result<PowerSeries> {
        let mut base = self.clone();
        let mut acc = PowerSeries::one(&self.ring, self.t_precision());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, c: &PAdicInt) -> PowerSeries {
        let c = self.ring.reduce(c.residue());
        PowerSeries {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|a| self.ring.mul(a, &c)).collect(),
        }
    }

    pub fn scale_i64(&self, c: i64) -> PowerSeries {
        self.scale(&PAdicInt::from_i64(&self.ring, c))
    }

    /// Multiply by `p^k` (coefficientwise, modulo `p^N`).
    pub fn mul_p_pow(&self, k: u32) -> PowerSeries {
        if k >= self.ring.precision() {
            return PowerSeries::zero(&self.ring, self.t_precision());
        }
        let pk = self.ring.p_pow(k).clone();
        PowerSeries {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|a| self.ring.mul(a, &pk)).collect(),
        }
    }

    /// Reduce to a lower p-adic precision.
    pub fn reduce_precision(&self, target: &Arc<PAdicRing>) -> Result<PowerSeries> {
        if target.prime() != self.prime() || target.precision() > self.p_precision() {
            return Err(Error::IncompatiblePrecision {
                left: self.ring.describe(),
                right: target.describe(),
            });
        }
        Ok(PowerSeries {
            ring: target.clone(),
            coeffs: self.coeffs.iter().map(|c| target.reduce(c)).collect(),
        })
    }

    /// Move to another precision through balanced representatives. Raising
    /// precision is exact for series whose coefficients are the balanced
    /// integers they were built from.
    pub fn transfer(&self, target: &Arc<PAdicRing>, t_precision: usize) -> PowerSeries {
        let mut coeffs: Vec<BigUint> = self.coeffs.iter().map(|c| self.ring.transfer(c, target)).collect();
        coeffs.resize(t_precision, BigUint::zero());
        PowerSeries {
            ring: target.clone(),
            coeffs,
        }
    }

    /// Polynomial with the stored coefficients.
    pub fn to_poly(&self) -> ZpPoly {
        ZpPoly::from_residues(&self.ring, self.coeffs.clone())
    }

    /// Substitute a polynomial into this one: `self(g(T))`, truncated.
    pub fn compose(&self, g: &PowerSeries) -> Result<PowerSeries> {
        self.check_compatible(g)?;
        let mut acc = PowerSeries::zero(&self.ring, self.t_precision());
        let Some(deg) = self.degree() else {
            return Ok(acc);
        };
        for i in (0..=deg).rev() {
            acc = acc.mul(g)?;
            acc.coeffs[0] = self.ring.add(&acc.coeffs[0], &self.coeffs[i]);
        }
        Ok(acc)
    }
}

/// Truncated convolution with a single reduction per output coefficient.
pub(crate) fn convolve(ring: &PAdicRing, a: &[BigUint], b: &[BigUint], len: usize) -> Vec<BigUint> {
    let mut acc = vec![BigUint::zero(); len];
    let a_nz: Vec<usize> = (0..a.len().min(len)).filter(|&i| !a[i].is_zero()).collect();
    let b_nz: Vec<usize> = (0..b.len().min(len)).filter(|&j| !b[j].is_zero()).collect();
    for &i in &a_nz {
        for &j in &b_nz {
            if i + j >= len {
                break;
            }
            acc[i + j] += &a[i] * &b[j];
        }
    }
    acc.into_iter().map(|x| ring.reduce(&x)).collect()
}

impl PartialEq for PowerSeries {
    fn eq(&self, other: &Self) -> bool {
        self.ring.same_as(&other.ring) && self.coeffs == other.coeffs
    }
}

impl Eq for PowerSeries {}

impl fmt::Debug for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (mod {}^{}, T^{})",
            self,
            self.prime(),
            self.p_precision(),
            self.t_precision()
        )
    }
}

impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_poly(&self.balanced_coeffs(), "T"))
    }
}

/// Render integer coefficients (ascending) as `3 + 2*T + T^2`.
pub fn format_poly(coeffs: &[BigInt], var: &str) -> String {
    let mut out = String::new();
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let negative = c < &BigInt::zero();
        let mag = if negative { -c } else { c.clone() };
        if out.is_empty() {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mono = match i {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{i}"),
        };
        if i == 0 {
            out.push_str(&mag.to_string());
        } else if mag.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&format!("{mag}*{mono}"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}
