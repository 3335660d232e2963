//! Best-effort factorization of distinguished polynomials.
//!
//! Irreducibility is certified only when it can be proved cheaply: degree
//! one, or a Newton polygon consisting of one segment whose height and
//! length are coprime (Eisenstein is the height-one case). Linear factors
//! are extracted by p-adic root search, and pure powers `r^k` with `p ∤ k`
//! are recognized by extracting a k-th root of the reversed polynomial.
//! Anything left over is returned flagged [`Irreducibility::Unverified`],
//! or recorded as an unsplit residual when it may hide a repeated factor.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::weierstrass::poly_multiplicity;
use super::{DistinguishedPoly, ZpPoly, DIVISIBILITY_SLACK};
use crate::error::{Error, Result};
use crate::padic::{PAdicMatrix, PAdicRing, Valuation};

const ROOT_SEARCH_BUDGET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Irreducibility {
    Certified,
    /// Supplied by the caller and not independently certified.
    UserSupplied,
    /// Produced by the factorizer without a certificate.
    Unverified,
}

impl fmt::Display for Irreducibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Irreducibility::Certified => "certified",
            Irreducibility::UserSupplied => "user-supplied",
            Irreducibility::Unverified => "unverified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrreducibleFactor {
    pub poly: DistinguishedPoly,
    pub multiplicity: u32,
    pub irreducibility: Irreducibility,
}

/// Output of [`factor_distinguished`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub factors: Vec<IrreducibleFactor>,
    /// Part of the input that could not be split or certified squarefree.
    pub residual: Option<DistinguishedPoly>,
}

impl Factorization {
    pub fn is_complete(&self) -> bool {
        self.residual.is_none()
    }

    pub fn into_factors(self) -> Result<Vec<IrreducibleFactor>> {
        match self.residual {
            None => Ok(self.factors),
            Some(r) => Err(Error::PartialFactorization {
                residual_degree: r.degree(),
            }),
        }
    }

    /// Product of all factors with multiplicity, times the residual.
    pub fn product(&self, ring: &std::sync::Arc<PAdicRing>) -> ZpPoly {
        let mut acc = ZpPoly::one(ring);
        for f in &self.factors {
            acc = acc.mul(&f.poly.as_poly().pow(f.multiplicity));
        }
        if let Some(r) = &self.residual {
            acc = acc.mul(r.as_poly());
        }
        acc
    }
}

/// Vertices of the lower convex hull of `(i, v_p(a_i))` over the
/// coefficients that do not vanish at precision.
pub fn newton_polygon(f: &ZpPoly) -> Vec<(usize, u32)> {
    let ring = f.ring();
    let points: Vec<(usize, u32)> = (0..=f.degree().unwrap_or(0))
        .filter_map(|i| ring.valuation(f.raw(i)).finite().map(|v| (i, v)))
        .collect();
    let mut hull: Vec<(usize, u32)> = Vec::new();
    for &pt in &points {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point when it is not strictly below the chord
            let lhs = (y2 as i64 - y1 as i64) * (pt.0 as i64 - x1 as i64);
            let rhs = (pt.1 as i64 - y1 as i64) * (x2 as i64 - x1 as i64);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    hull
}

/// Certificate of irreducibility by degree or Newton polygon.
pub(crate) fn certify(f: &DistinguishedPoly) -> bool {
    let deg = f.degree();
    if deg == 1 {
        return true;
    }
    if deg == 0 {
        return false;
    }
    let hull = newton_polygon(f.as_poly());
    match hull.as_slice() {
        [(0, v0), (end, 0)] if *end == deg => (*v0 as usize).gcd(&deg) == 1,
        _ => false,
    }
}

impl DistinguishedPoly {
    /// True when irreducibility over Z_p can be certified cheaply.
    pub fn is_certified_irreducible(&self) -> bool {
        certify(self)
    }
}

/// Split a distinguished polynomial of degree `>= 1` into irreducible factors.
pub fn factor_distinguished(f0: &DistinguishedPoly) -> Result<Factorization> {
    if f0.degree() == 0 {
        return Err(Error::InvalidConfig(
            "cannot factor a distinguished polynomial of degree 0".into(),
        ));
    }
    let ring = f0.ring().clone();
    let threshold = ring.precision().saturating_sub(DIVISIBILITY_SLACK);
    let mut out = Factorization {
        factors: Vec::new(),
        residual: None,
    };

    let mut h = f0.as_poly().clone();
    let mut t_power = 0;
    while h.degree().unwrap_or(0) >= 1 && ring.valuation(h.raw(0)).capped(ring.precision()) >= threshold {
        h = h.div_rem_monic(&ZpPoly::t_pow(&ring, 1)).0;
        t_power += 1;
    }
    if t_power > 0 {
        push_factor(
            &mut out.factors,
            DistinguishedPoly::t(&ring),
            t_power,
            Irreducibility::Certified,
        );
    }
    split(DistinguishedPoly::new(h)?, 1, &mut out)?;
    Ok(out)
}

fn push_factor(factors: &mut Vec<IrreducibleFactor>, poly: DistinguishedPoly, m: u32, irr: Irreducibility) {
    if let Some(existing) = factors.iter_mut().find(|f| f.poly.same_prime_ideal(&poly)) {
        existing.multiplicity += m;
        return;
    }
    factors.push(IrreducibleFactor {
        poly,
        multiplicity: m,
        irreducibility: irr,
    });
}

fn split(h: DistinguishedPoly, scale: u32, out: &mut Factorization) -> Result<()> {
    let deg = h.degree();
    if deg == 0 {
        return Ok(());
    }
    if certify(&h) {
        push_factor(&mut out.factors, h, scale, Irreducibility::Certified);
        return Ok(());
    }
    let p = h.ring().prime();
    for k in (2..=deg).filter(|&k| deg.is_multiple_of(k) && !k.is_multiple_of(p as usize)) {
        if let Some(root) = kth_root(&h, k) {
            return split(root, scale * k as u32, out);
        }
    }
    if let Some(alpha) = find_root(h.as_poly()) {
        let ring = h.ring().clone();
        let lin = DistinguishedPoly::new(ZpPoly::linear(&ring, &alpha))?;
        let m = poly_multiplicity(h.as_poly(), &lin)?.max(1);
        let rest = h.as_poly().div_rem_monic(&lin.as_poly().pow(m)).0;
        push_factor(&mut out.factors, lin, scale * m, Irreducibility::Certified);
        return split(DistinguishedPoly::new(rest)?, scale, out);
    }
    if scale == 1 && discriminant_nonvanishing(h.as_poly()) {
        push_factor(&mut out.factors, h, 1, Irreducibility::Unverified);
    } else {
        let residual = match out.residual.take() {
            Some(r) => r.mul(&h.pow(scale)),
            None => h.pow(scale),
        };
        out.residual = Some(residual);
    }
    Ok(())
}

/// Monic `r` with `r^k = h`, by coefficientwise root extraction of the
/// reversed polynomial `T^deg h(1/T) = 1 + ...` (needs `p ∤ k`).
fn kth_root(h: &DistinguishedPoly, k: usize) -> Option<DistinguishedPoly> {
    let ring = h.ring().clone();
    let deg = h.degree();
    let m = deg / k;
    let rev: Vec<BigUint> = (0..=deg).map(|i| h.as_poly().raw(deg - i).clone()).collect();
    let k_inv = ring.inverse(&ring.from_i64(k as i64)).ok()?;
    let mut s = vec![BigUint::zero(); m + 1];
    s[0] = BigUint::one();
    for j in 1..=m {
        // coefficient j of s^k, computed with s_j = 0
        let sp = ZpPoly::from_residues(&ring, s.clone()).pow(k as u32);
        let partial = sp.raw(j).clone();
        s[j] = ring.mul(&ring.sub(&rev[j], &partial), &k_inv);
    }
    let root_coeffs: Vec<BigUint> = s.into_iter().rev().collect();
    let root = DistinguishedPoly::new(ZpPoly::from_residues(&ring, root_coeffs)).ok()?;
    let threshold = ring.precision().saturating_sub(DIVISIBILITY_SLACK);
    h.as_poly()
        .sub(&root.as_poly().pow(k as u32))
        .vanishes_to(threshold)
        .then_some(root)
}

/// A root in `pZ_p`, found by digit search until Newton's method applies.
/// The root is only determined modulo `p^(N - v(h'(root)))`; the smallest
/// balanced representative of that class is returned.
fn find_root(h: &ZpPoly) -> Option<BigUint> {
    let c = search_root(h)?;
    let ring = h.ring();
    let n = ring.precision();
    let Valuation::Finite(dv) = ring.valuation(&h.derivative().eval(&c)) else {
        return Some(c);
    };
    let coarse = PAdicRing::new(ring.prime(), n.saturating_sub(dv).max(1)).ok()?;
    let small = coarse.transfer(&coarse.reduce(&c), ring);
    let threshold = n.saturating_sub(DIVISIBILITY_SLACK);
    if ring.valuation(&h.eval(&small)).capped(n) >= threshold {
        Some(small)
    } else {
        Some(c)
    }
}

fn search_root(h: &ZpPoly) -> Option<BigUint> {
    let ring = h.ring().clone();
    let n = ring.precision();
    let threshold = n.saturating_sub(DIVISIBILITY_SLACK);
    let dh = h.derivative();
    let mut frontier: Vec<(BigUint, u32)> = vec![(BigUint::zero(), 1)];
    let mut spent = 0;
    while let Some((c, depth)) = frontier.pop() {
        spent += 1;
        if spent > ROOT_SEARCH_BUDGET || depth >= n {
            return None;
        }
        let hv = ring.valuation(&h.eval(&c)).capped(n);
        if hv >= threshold {
            return Some(newton(h, &dh, c.clone(), threshold).unwrap_or(c));
        }
        if hv < depth {
            continue;
        }
        if let Valuation::Finite(dv) = ring.valuation(&dh.eval(&c)) {
            if hv > 2 * dv {
                if let Some(root) = newton(h, &dh, c.clone(), threshold) {
                    return Some(root);
                }
            }
        }
        let step = ring.p_pow(depth).clone();
        for t in (0..ring.prime()).rev() {
            frontier.push((ring.add(&c, &(&step * BigUint::from(t))), depth + 1));
        }
    }
    None
}

fn newton(h: &ZpPoly, dh: &ZpPoly, mut c: BigUint, threshold: u32) -> Option<BigUint> {
    let ring = h.ring().clone();
    let mut hval = 0;
    for _ in 0..64 {
        let hv = h.eval(&c);
        hval = ring.valuation(&hv).capped(ring.precision());
        if hval >= ring.precision() {
            break;
        }
        let dv = dh.eval(&c);
        let Some(dval) = ring.valuation(&dv).finite() else {
            break;
        };
        if hval <= dval {
            break;
        }
        let num = ring.shift_down(&hv, dval);
        let den = ring.reduce(&ring.shift_down(&dv, dval));
        let step = ring.mul(&num, &ring.inverse(&den).ok()?);
        if step.is_zero() {
            break;
        }
        c = ring.sub(&c, &step);
    }
    (hval >= threshold).then_some(c)
}

/// Sylvester matrix of two polynomials over Z_p; its determinant is the
/// resultant.
pub(crate) fn sylvester_zp(a: &ZpPoly, b: &ZpPoly) -> PAdicMatrix {
    let ring = a.ring().clone();
    let m = a.degree().unwrap_or(0);
    let n = b.degree().unwrap_or(0);
    let size = m + n;
    let mut s = PAdicMatrix::zeros(&ring, size, size);
    for row in 0..n {
        for i in 0..=m {
            s.set_raw(row, row + i, a.raw(m - i).clone());
        }
    }
    for row in 0..m {
        for i in 0..=n {
            s.set_raw(n + row, row + i, b.raw(n - i).clone());
        }
    }
    s
}

fn discriminant_nonvanishing(h: &ZpPoly) -> bool {
    let dh = h.derivative();
    if dh.is_zero() {
        return false;
    }
    sylvester_zp(h, &dh).elementary_divisors().certified
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PAdicRing;
    use std::sync::Arc;

    fn ring() -> Arc<PAdicRing> {
        PAdicRing::new(3, 40).unwrap()
    }

    fn dp(c: &[i64]) -> DistinguishedPoly {
        DistinguishedPoly::from_i64s(&ring(), c).unwrap()
    }

    fn summary(f: &Factorization) -> Vec<(String, u32, Irreducibility)> {
        f.factors
            .iter()
            .map(|x| (x.poly.to_string(), x.multiplicity, x.irreducibility))
            .collect()
    }

    #[test]
    fn eisenstein_is_certified() {
        let f = factor_distinguished(&dp(&[3, 3, 1])).unwrap();
        assert!(f.is_complete());
        assert_eq!(
            summary(&f),
            vec![("3 + 3*T + T^2".into(), 1, Irreducibility::Certified)]
        );
    }

    #[test]
    fn strips_powers_of_t() {
        let f = factor_distinguished(&dp(&[0, 3, 1])).unwrap();
        assert_eq!(
            summary(&f),
            vec![
                ("T".into(), 1, Irreducibility::Certified),
                ("3 + T".into(), 1, Irreducibility::Certified)
            ]
        );
        let f = factor_distinguished(&dp(&[0, 0, 1])).unwrap();
        assert_eq!(summary(&f), vec![("T".into(), 2, Irreducibility::Certified)]);
    }

    #[test]
    fn newton_polygon_vertices() {
        // T^2 + 3T + 3: single segment (0,1)-(2,0)
        assert_eq!(newton_polygon(dp(&[3, 3, 1]).as_poly()), vec![(0, 1), (2, 0)]);
        // (T+3)(T+9) = T^2 + 12T + 27: slopes 2 and 1
        assert_eq!(newton_polygon(dp(&[27, 12, 1]).as_poly()), vec![(0, 3), (1, 1), (2, 0)]);
    }

    #[test]
    fn splits_linear_factors_with_distinct_slopes() {
        let f = factor_distinguished(&dp(&[27, 12, 1])).unwrap();
        assert!(f.is_complete());
        let mut names: Vec<String> = f.factors.iter().map(|x| x.poly.to_string()).collect();
        names.sort();
        assert_eq!(names, vec!["3 + T", "9 + T"]);
    }

    #[test]
    fn recognizes_pure_powers() {
        // (T + 3)^2
        let f = factor_distinguished(&dp(&[9, 6, 1])).unwrap();
        assert_eq!(summary(&f), vec![("3 + T".into(), 2, Irreducibility::Certified)]);
        // (T^2 + 3)^2, p = 3: square of an irreducible with slope 1/2
        let sq = dp(&[3, 0, 1]).pow(2);
        let f = factor_distinguished(&sq).unwrap();
        assert_eq!(summary(&f), vec![("3 + T^2".into(), 2, Irreducibility::Certified)]);
    }

    #[test]
    fn unverified_when_no_certificate() {
        // T^2 + 9 has no root in Z_3 and a slope-1 polygon of length 2
        let f = factor_distinguished(&dp(&[9, 0, 1])).unwrap();
        assert!(f.is_complete());
        assert_eq!(summary(&f), vec![("9 + T^2".into(), 1, Irreducibility::Unverified)]);
    }

    #[test]
    fn product_reconstructs_input() {
        let g = dp(&[3, 3, 1]).mul(&dp(&[0, 1]).pow(2)).mul(&dp(&[-6, 1]));
        let f = factor_distinguished(&g).unwrap();
        assert!(f.is_complete());
        assert_eq!(&f.product(&ring()), g.as_poly());
    }
}
