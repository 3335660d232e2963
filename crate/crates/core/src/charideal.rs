//! Torsion Λ-modules given by square presentation matrices.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lambda::{
    factor_distinguished, multiplicity, weierstrass_prepare, DistinguishedPoly, Irreducibility, IrreducibleFactor,
    PowerSeries, ZpPoly,
};
use crate::padic::{PAdicRing, Valuation};

/// `Λ^n / rowspan(matrix)`, with the determinant checked nonzero at precision.
#[derive(Debug, Clone)]
pub struct PresentationModule {
    n: usize,
    entries: Vec<PowerSeries>,
    det: PowerSeries,
    fundamental: Option<FundamentalData>,
}

/// Exponents of a diagonal presentation built by [`fundamental_module`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FundamentalData {
    pub over_p: Vec<u32>,
    pub outside_p: Vec<(DistinguishedPoly, u32)>,
}

impl PresentationModule {
    pub fn new(rows: Vec<Vec<PowerSeries>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidConfig("presentation matrix is empty".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        let entries: Vec<PowerSeries> = rows.into_iter().flatten().collect();
        let first = &entries[0];
        if let Some(bad) = entries
            .iter()
            .find(|e| !e.ring().same_as(first.ring()) || e.t_precision() != first.t_precision())
        {
            return Err(Error::IncompatiblePrecision {
                left: format!("{} T^{}", first.ring().describe(), first.t_precision()),
                right: format!("{} T^{}", bad.ring().describe(), bad.t_precision()),
            });
        }
        let det = determinant(n, &entries)?;
        if det.is_zero_at_precision() {
            return Err(Error::NotTorsionAtPrecision);
        }
        Ok(PresentationModule {
            n,
            entries,
            det,
            fundamental: None,
        })
    }

    pub fn diagonal(entries: Vec<PowerSeries>) -> Result<Self> {
        let n = entries.len();
        let ring = entries
            .first()
            .ok_or_else(|| Error::InvalidConfig("presentation matrix is empty".into()))?
            .ring()
            .clone();
        let d = entries[0].t_precision();
        let rows = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let mut row = vec![PowerSeries::zero(&ring, d); n];
                row[i] = e;
                row
            })
            .collect();
        Self::new(rows)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &PowerSeries {
        &self.entries[i * self.n + j]
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        self.entries[0].ring()
    }

    pub fn t_precision(&self) -> usize {
        self.entries[0].t_precision()
    }

    pub fn fundamental_data(&self) -> Option<&FundamentalData> {
        self.fundamental.as_ref()
    }

    /// The same presentation at another precision, via balanced lifts.
    pub fn transfer(&self, ring: &Arc<PAdicRing>, t_precision: usize) -> Result<PresentationModule> {
        let rows = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.entry(i, j).transfer(ring, t_precision))
                    .collect()
            })
            .collect();
        let mut m = PresentationModule::new(rows)?;
        m.fundamental = self.fundamental.as_ref().map(|f| FundamentalData {
            over_p: f.over_p.clone(),
            outside_p: f.outside_p.iter().map(|(g, e)| (g.transfer(ring), *e)).collect(),
        });
        Ok(m)
    }

    /// Block-diagonal presentation of `self ⊕ other`.
    pub fn direct_sum(&self, other: &PresentationModule) -> Result<PresentationModule> {
        let n = self.n + other.n;
        let zero = PowerSeries::zero(self.ring(), self.t_precision());
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i < self.n, j < self.n) {
                        (true, true) => self.entry(i, j).clone(),
                        (false, false) => other.entry(i - self.n, j - self.n).clone(),
                        _ => zero.clone(),
                    })
                    .collect()
            })
            .collect();
        let mut sum = PresentationModule::new(rows)?;
        if let (Some(a), Some(b)) = (&self.fundamental, &other.fundamental) {
            sum.fundamental = Some(FundamentalData {
                over_p: a.over_p.iter().chain(&b.over_p).copied().collect(),
                outside_p: a.outside_p.iter().chain(&b.outside_p).cloned().collect(),
            });
        }
        Ok(sum)
    }
}

impl fmt::Display for PresentationModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.n {
            if i > 0 {
                f.write_str("; ")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
        }
        f.write_str("]")
    }
}

/// Determinant over Λ. Triangular matrices take the diagonal product;
/// otherwise the division-free Berkowitz recurrence is used.
pub(crate) fn determinant(n: usize, a: &[PowerSeries]) -> Result<PowerSeries> {
    let at = |i: usize, j: usize| &a[i * n + j];
    let upper = (0..n).all(|i| (0..i).all(|j| at(i, j).is_zero_at_precision()));
    let lower = (0..n).all(|i| (i + 1..n).all(|j| at(i, j).is_zero_at_precision()));
    if upper || lower {
        let mut acc = PowerSeries::one(a[0].ring(), a[0].t_precision());
        for i in 0..n {
            acc = acc.mul(at(i, i))?;
        }
        return Ok(acc);
    }

    let one = PowerSeries::one(a[0].ring(), a[0].t_precision());
    let mut vect = vec![one.clone(), at(0, 0).neg()];
    for r in 1..n {
        let row: Vec<&PowerSeries> = (0..r).map(|j| at(r, j)).collect();
        let mut v: Vec<PowerSeries> = (0..r).map(|i| at(i, r).clone()).collect();
        let mut t = vec![one.clone(), at(r, r).neg()];
        for k in 0..r {
            t.push(dot(&row, &v)?.neg());
            if k + 1 < r {
                v = (0..r)
                    .map(|i| dot(&(0..r).map(|j| at(i, j)).collect::<Vec<_>>(), &v))
                    .collect::<Result<_>>()?;
            }
        }
        let mut next = Vec::with_capacity(r + 2);
        for i in 0..r + 2 {
            let mut s = PowerSeries::zero(a[0].ring(), a[0].t_precision());
            for j in 0..=i.min(r) {
                s = s.add(&t[i - j].mul(&vect[j])?)?;
            }
            next.push(s);
        }
        vect = next;
    }
    let last = vect.pop().expect("nonempty");
    Ok(if n.is_multiple_of(2) { last } else { last.neg() })
}

fn dot(row: &[&PowerSeries], v: &[PowerSeries]) -> Result<PowerSeries> {
    let mut s = PowerSeries::zero(v[0].ring(), v[0].t_precision());
    for (a, b) in row.iter().zip(v) {
        if !a.is_zero_at_precision() && !b.is_zero_at_precision() {
            s = s.add(&a.mul(b)?)?;
        }
    }
    Ok(s)
}

/// Generator of `Fitt_0(M)`, which is also the characteristic ideal since the
/// presentation is square.
pub fn fitting_generator(m: &PresentationModule) -> PowerSeries {
    m.det.clone()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeightOnePrime {
    OverP,
    OutsideP(DistinguishedPoly),
}

impl HeightOnePrime {
    pub fn outside(g: DistinguishedPoly) -> Result<Self> {
        if g.degree() == 0 {
            return Err(Error::NotIrreducible("the unit polynomial 1".into()));
        }
        Ok(HeightOnePrime::OutsideP(g))
    }

    pub fn label(&self, prime: u32) -> String {
        match self {
            HeightOnePrime::OverP => format!("({prime})"),
            HeightOnePrime::OutsideP(g) => format!("({g})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CharacteristicIdeal {
    pub mu: u32,
    pub factors: Vec<IrreducibleFactor>,
    /// Distinguished part left unsplit by the factorizer.
    pub residual: Option<DistinguishedPoly>,
    ring: Arc<PAdicRing>,
    t_precision: usize,
}

impl CharacteristicIdeal {
    /// Degree of the distinguished part of the generator.
    pub fn lambda(&self) -> usize {
        self.factors
            .iter()
            .map(|f| f.poly.degree() * f.multiplicity as usize)
            .sum::<usize>()
            + self.residual.as_ref().map_or(0, |r| r.degree())
    }

    pub fn multiplicity_of(&self, g: &DistinguishedPoly) -> u32 {
        self.factors
            .iter()
            .find(|f| f.poly.same_prime_ideal(g))
            .map_or(0, |f| f.multiplicity)
    }

    /// `p^mu * Π g_i^{m_i}` (times the residual) in the ring of the module.
    pub fn generator(&self) -> Result<PowerSeries> {
        let mut acc = self
            .residual
            .as_ref()
            .map_or_else(|| ZpPoly::one(&self.ring), |r| r.as_poly().transfer(&self.ring));
        for f in &self.factors {
            acc = acc.mul(&f.poly.as_poly().transfer(&self.ring).pow(f.multiplicity));
        }
        Ok(acc.to_series(self.t_precision)?.mul_p_pow(self.mu))
    }
}

impl fmt::Display for CharacteristicIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mu={}, factors=[", self.mu)?;
        for (i, x) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({},{})", x.poly, x.multiplicity)?;
        }
        f.write_str("]")?;
        if let Some(r) = &self.residual {
            write!(f, ", residual={r}")?;
        }
        Ok(())
    }
}

/// Characteristic ideal from the prepared Fitting generator. Known factors
/// are split off first by repeated division; the rest is factored.
pub fn characteristic_ideal(m: &PresentationModule, known: &[DistinguishedPoly]) -> Result<CharacteristicIdeal> {
    let prepared = weierstrass_prepare(&m.det)?;
    let ring = prepared.distinguished.ring().clone();
    let mut rest = prepared.distinguished.as_poly().clone();
    let mut factors: Vec<IrreducibleFactor> = Vec::new();
    for g in known {
        let g = g.transfer(&ring);
        if factors.iter().any(|f| f.poly.same_prime_ideal(&g)) || rest.degree().unwrap_or(0) < g.degree() {
            continue;
        }
        let k = crate::lambda::poly_multiplicity(&rest, &g)?;
        if k > 0 {
            rest = rest.div_rem_monic(&g.as_poly().pow(k)).0;
            let irreducibility = if g.is_certified_irreducible() {
                Irreducibility::Certified
            } else {
                Irreducibility::UserSupplied
            };
            factors.push(IrreducibleFactor {
                poly: g,
                multiplicity: k,
                irreducibility,
            });
        }
    }
    let mut residual = None;
    if rest.degree().unwrap_or(0) >= 1 {
        let split = factor_distinguished(&DistinguishedPoly::new(rest)?)?;
        for f in split.factors {
            match factors.iter_mut().find(|x| x.poly.same_prime_ideal(&f.poly)) {
                Some(x) => x.multiplicity += f.multiplicity,
                None => factors.push(f),
            }
        }
        residual = split.residual;
    }
    Ok(CharacteristicIdeal {
        mu: prepared.mu,
        factors,
        residual,
        ring: m.ring().clone(),
        t_precision: m.t_precision(),
    })
}

/// Length of `M_q` over the discrete valuation ring `Λ_q`.
pub fn local_length(m: &PresentationModule, q: &HeightOnePrime) -> Result<u32> {
    match q {
        HeightOnePrime::OverP => match m.det.valuation() {
            Valuation::Finite(v) => Ok(v),
            Valuation::Vanishing => Err(Error::NotTorsionAtPrecision),
        },
        HeightOnePrime::OutsideP(g) => multiplicity(&m.det, g),
    }
}

/// Diagonal presentation of `⊕ Λ/(p^e_i) ⊕ ⊕ Λ/(g_i^f_i)`. Each `g_i` must be
/// certified irreducible.
pub fn fundamental_module(
    ring: &Arc<PAdicRing>,
    t_precision: usize,
    over_p: &[u32],
    outside_p: &[(DistinguishedPoly, u32)],
) -> Result<PresentationModule> {
    for (g, _) in outside_p {
        if !g.is_certified_irreducible() {
            let split = factor_distinguished(g)?;
            let single = split.is_complete() && split.factors.len() == 1 && split.factors[0].multiplicity == 1;
            return Err(Error::NotIrreducible(if single {
                format!("{g} could not be certified irreducible")
            } else {
                format!("{g} is reducible")
            }));
        }
    }
    build_fundamental(ring, t_precision, over_p, outside_p)
}

/// As [`fundamental_module`], trusting the caller that each `g_i` is
/// irreducible.
pub fn fundamental_module_unchecked(
    ring: &Arc<PAdicRing>,
    t_precision: usize,
    over_p: &[u32],
    outside_p: &[(DistinguishedPoly, u32)],
) -> Result<PresentationModule> {
    build_fundamental(ring, t_precision, over_p, outside_p)
}

fn build_fundamental(
    ring: &Arc<PAdicRing>,
    t_precision: usize,
    over_p: &[u32],
    outside_p: &[(DistinguishedPoly, u32)],
) -> Result<PresentationModule> {
    if over_p.contains(&0) || outside_p.iter().any(|(_, f)| *f == 0) {
        return Err(Error::InvalidConfig("fundamental exponents must be at least 1".into()));
    }
    if let Some((g, _)) = outside_p.iter().find(|(g, _)| g.degree() == 0) {
        return Err(Error::NotIrreducible(g.to_string()));
    }
    let mut diag: Vec<PowerSeries> = over_p
        .iter()
        .map(|&e| PowerSeries::one(ring, t_precision).mul_p_pow(e))
        .collect();
    for (g, f) in outside_p {
        diag.push(g.transfer(ring).pow(*f).to_series(t_precision)?);
    }
    if diag.is_empty() {
        diag.push(PowerSeries::one(ring, t_precision));
    }
    let mut m = PresentationModule::diagonal(diag)?;
    m.fundamental = Some(FundamentalData {
        over_p: over_p.to_vec(),
        outside_p: outside_p.iter().map(|(g, f)| (g.transfer(ring), *f)).collect(),
    });
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeComparison {
    pub prime: HeightOnePrime,
    pub length_m: u32,
    pub length_n: u32,
    /// `char(N)_q ⊆ char(M)_q`.
    pub inclusion: bool,
}

pub fn compare_at_primes(
    m: &PresentationModule,
    n: &PresentationModule,
    primes: &[HeightOnePrime],
) -> Result<Vec<PrimeComparison>> {
    primes
        .iter()
        .map(|q| {
            let length_m = local_length(m, q)?;
            let length_n = local_length(n, q)?;
            Ok(PrimeComparison {
                prime: q.clone(),
                length_m,
                length_n,
                inclusion: length_n >= length_m,
            })
        })
        .collect()
}
