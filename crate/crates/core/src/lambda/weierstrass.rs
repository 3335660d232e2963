//! Weierstrass preparation and division in Z_p[[T]].
//!
//! A truncated series is prepared as the polynomial of degree `< D` formed
//! by its stored coefficients. For such input the unit factor is itself a
//! polynomial, so `p^mu * unit * distinguished` reproduces the input
//! exactly modulo `(p^N, T^D)`.

use std::sync::Arc;

use num_bigint::BigUint;

use super::{DistinguishedPoly, PowerSeries, ZpPoly};
use crate::error::{Error, Result};
use crate::padic::{PAdicRing, Valuation};

/// A remainder whose coefficients all have valuation `>= N - DIVISIBILITY_SLACK`
/// counts as zero in divisibility tests.
pub const DIVISIBILITY_SLACK: u32 = 2;

const MAX_LIFT_STEPS: u32 = 64;

/// `f = p^mu * unit * distinguished`.
#[derive(Debug, Clone)]
pub struct WeierstrassData {
    pub mu: u32,
    /// Unit of Λ, stored at the effective p-precision.
    pub unit: PowerSeries,
    pub distinguished: DistinguishedPoly,
    /// `N - mu`: digits to which `unit` and `distinguished` are determined.
    pub p_precision: u32,
    pub t_precision: usize,
    /// Correction steps taken while lifting the distinguished factor.
    pub iterations: u32,
    source: Arc<PAdicRing>,
}

impl WeierstrassData {
    /// The λ-invariant: degree of the distinguished factor.
    pub fn lambda(&self) -> usize {
        self.distinguished.degree()
    }

    /// `p^mu * unit * distinguished` in the ring of the prepared input.
    pub fn reconstruct(&self) -> Result<PowerSeries> {
        let d = self.t_precision;
        let prod = self.unit.mul(&self.distinguished.to_series(d)?)?;
        let lifted: Vec<BigUint> = prod
            .raw_coeffs()
            .iter()
            .map(|c| self.source.reduce(&(c * self.source.p_pow(self.mu))))
            .collect();
        Ok(PowerSeries::from_residues(&self.source, d, lifted))
    }
}

/// Split a nonzero series into `p^mu`, a unit, and a distinguished polynomial.
///
/// The distinguished factor is found by Newton correction on the division
/// identity `g = u * f0 + rho`: starting from `f0 = T^n`, each step divides
/// `g` by the current `f0` and adds `rho * u^-1 mod f0`. The remainder's
/// valuation at least doubles per step, and all arithmetic is exact modulo
/// `p^(N - mu)`.
pub fn weierstrass_prepare(f: &PowerSeries) -> Result<WeierstrassData> {
    let source = f.ring().clone();
    let t_precision = f.t_precision();
    let mu = match f.valuation() {
        Valuation::Vanishing => return Err(Error::ZeroAtPrecision),
        Valuation::Finite(v) => v,
    };
    let ring = if mu == 0 {
        source.clone()
    } else {
        PAdicRing::new(source.prime(), source.precision() - mu)?
    };
    let g_coeffs: Vec<BigUint> = f
        .raw_coeffs()
        .iter()
        .map(|c| ring.reduce(&source.shift_down(c, mu)))
        .collect();
    let n = g_coeffs
        .iter()
        .position(|c| ring.is_unit(c))
        .ok_or(Error::DegreeCapExceeded { cap: t_precision })?;
    let g = ZpPoly::from_residues(&ring, g_coeffs);

    if n == 0 {
        return Ok(WeierstrassData {
            mu,
            unit: g.to_series(t_precision)?,
            distinguished: DistinguishedPoly::one(&ring),
            p_precision: ring.precision(),
            t_precision,
            iterations: 0,
            source,
        });
    }

    let mut f0 = ZpPoly::t_pow(&ring, n);
    let mut iterations = 0;
    let unit = loop {
        let (u, rho) = g.div_rem_monic(&f0);
        if rho.is_zero() {
            break u;
        }
        if iterations >= MAX_LIFT_STEPS {
            return Err(Error::NoConvergence { iterations });
        }
        let w = inverse_mod(&u.rem_monic(&f0), &f0)?;
        let delta = rho.mul(&w).rem_monic(&f0);
        f0 = f0.add(&delta);
        iterations += 1;
    };

    Ok(WeierstrassData {
        mu,
        unit: unit.to_series(t_precision)?,
        distinguished: DistinguishedPoly::new(f0)?,
        p_precision: ring.precision(),
        t_precision,
        iterations,
        source,
    })
}

/// Inverse of `a` in `Z_p[T]/(modulus)` for monic `modulus ≡ T^n (mod p)`,
/// where `a(0)` is a unit. Newton iteration `w <- w (2 - a w)`.
pub(crate) fn inverse_mod(a: &ZpPoly, modulus: &ZpPoly) -> Result<ZpPoly> {
    let ring = modulus.ring().clone();
    let a0 = a.raw(0);
    let inv0 = ring.inverse(a0)?;
    let mut w = ZpPoly::from_residues(&ring, vec![inv0]);
    let two = ZpPoly::from_residues(&ring, vec![BigUint::from(2u32)]);
    let one = ZpPoly::one(&ring);
    for _ in 0..MAX_LIFT_STEPS {
        let aw = a.mul(&w).rem_monic(modulus);
        if aw == one {
            return Ok(w);
        }
        w = w.mul(&two.sub(&aw)).rem_monic(modulus);
    }
    Err(Error::NoConvergence {
        iterations: MAX_LIFT_STEPS,
    })
}

/// Division with remainder by a distinguished polynomial:
/// `g = quotient * f0 + remainder` with `deg remainder < deg f0`.
///
/// Operands at different p-precisions are divided at the lower one.
pub fn weierstrass_divide(g: &PowerSeries, f0: &DistinguishedPoly) -> Result<(PowerSeries, ZpPoly)> {
    if g.prime() != f0.ring().prime() {
        return Err(Error::IncompatiblePrecision {
            left: g.ring().describe(),
            right: f0.ring().describe(),
        });
    }
    let (q, r) = g.to_poly().div_rem_monic(f0.as_poly());
    Ok((q.to_series(g.t_precision())?, r))
}

/// Largest `k` with `g^k | f`, by repeated division.
pub fn multiplicity(f: &PowerSeries, g: &DistinguishedPoly) -> Result<u32> {
    if f.is_zero_at_precision() {
        return Err(Error::ZeroAtPrecision);
    }
    if g.degree() == 0 {
        return Err(Error::NotIrreducible("the unit polynomial 1".into()));
    }
    poly_multiplicity(&f.to_poly(), g)
}

pub(crate) fn poly_multiplicity(f: &ZpPoly, g: &DistinguishedPoly) -> Result<u32> {
    let precision = f.ring().precision().min(g.ring().precision());
    let threshold = precision.saturating_sub(DIVISIBILITY_SLACK);
    if f.vanishes_to(threshold) {
        return Err(Error::ZeroAtPrecision);
    }
    let mut cur = f.clone();
    let mut count = 0;
    while cur.degree().unwrap_or(0) >= g.degree() && !cur.vanishes_to(threshold) {
        let (q, r) = cur.div_rem_monic(g.as_poly());
        if !r.vanishes_to(threshold) {
            break;
        }
        count += 1;
        cur = q;
    }
    Ok(count)
}
