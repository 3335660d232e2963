//! Capped-precision arithmetic in Z_p and p-adic matrix elimination.
//!
//! Elements are stored as residues modulo `p^N`. A residue that is zero
//! modulo `p^N` is *zero to working precision*: its valuation is reported
//! as [`Valuation::Vanishing`], never as an exact zero with infinite
//! valuation.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default number of p-adic digits carried by every element.
pub const DEFAULT_P_PRECISION: u32 = 40;

/// p-adic valuation of an element known modulo `p^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(u32),
    /// The residue is zero modulo `p^N`.
    Vanishing,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Vanishing => None,
        }
    }

    pub fn is_vanishing(self) -> bool {
        matches!(self, Valuation::Vanishing)
    }

    /// Valuation with `Vanishing` mapped to the precision cap.
    pub fn capped(self, precision: u32) -> u32 {
        match self {
            Valuation::Finite(v) => v,
            Valuation::Vanishing => precision,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
            (Valuation::Finite(_), Valuation::Vanishing) => Ordering::Less,
            (Valuation::Vanishing, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Vanishing, Valuation::Vanishing) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Vanishing => write!(f, "zero-at-precision"),
        }
    }
}

/// The quotient ring `Z / p^N`, viewed as Z_p at precision `N`.
///
/// Shared behind an `Arc` by every element, series and matrix built on it.
#[derive(Debug)]
pub struct PAdicRing {
    prime: u32,
    precision: u32,
    powers: Vec<BigUint>,
    half: BigUint,
}

impl PAdicRing {
    pub fn new(prime: u32, precision: u32) -> Result<Arc<Self>> {
        if prime < 3 || !is_prime(prime) {
            return Err(Error::InvalidConfig(format!("{prime} is not an odd prime")));
        }
        if precision == 0 {
            return Err(Error::InvalidConfig("precision must be positive".into()));
        }
        let p = BigUint::from(prime);
        let mut powers = Vec::with_capacity(precision as usize + 1);
        powers.push(BigUint::one());
        for k in 0..precision as usize {
            let next = &powers[k] * &p;
            powers.push(next);
        }
        let half = &powers[precision as usize] >> 1u32;
        Ok(Arc::new(PAdicRing {
            prime,
            precision,
            powers,
            half,
        }))
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> &BigUint {
        &self.powers[self.precision as usize]
    }

    /// `p^k` for `k <= N`.
    pub fn p_pow(&self, k: u32) -> &BigUint {
        &self.powers[k as usize]
    }

    pub fn same_as(&self, other: &PAdicRing) -> bool {
        self.prime == other.prime && self.precision == other.precision
    }

    pub fn describe(&self) -> String {
        format!("Z_{}/p^{}", self.prime, self.precision)
    }

    // ---- raw residue kernels ----

    pub fn reduce(&self, x: &BigUint) -> BigUint {
        x % self.modulus()
    }

    pub fn from_bigint(&self, x: &BigInt) -> BigUint {
        let m = BigInt::from_biguint(Sign::Plus, self.modulus().clone());
        x.mod_floor(&m).to_biguint().expect("mod_floor is non-negative")
    }

    pub fn from_i64(&self, x: i64) -> BigUint {
        self.from_bigint(&BigInt::from(x))
    }

    /// Balanced representative in `(-p^N/2, p^N/2]`.
    pub fn balanced(&self, x: &BigUint) -> BigInt {
        if x > &self.half {
            BigInt::from_biguint(Sign::Plus, x.clone()) - BigInt::from_biguint(Sign::Plus, self.modulus().clone())
        } else {
            BigInt::from_biguint(Sign::Plus, x.clone())
        }
    }

    pub fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if &s >= self.modulus() {
            s - self.modulus()
        } else {
            s
        }
    }

    pub fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            self.modulus() - (b - a)
        }
    }

    pub fn neg(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            self.modulus() - a
        }
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % self.modulus()
    }

    /// `a - q*b`.
    pub fn sub_mul(&self, a: &BigUint, q: &BigUint, b: &BigUint) -> BigUint {
        let t = (q * b) % self.modulus();
        self.sub(a, &t)
    }

    pub fn valuation(&self, x: &BigUint) -> Valuation {
        if x.is_zero() {
            return Valuation::Vanishing;
        }
        let mut v = 0u32;
        let mut y = x.clone();
        let p = self.prime;
        loop {
            let (q, r) = y.div_rem(&BigUint::from(p));
            if !r.is_zero() {
                break;
            }
            y = q;
            v += 1;
        }
        if v >= self.precision {
            Valuation::Vanishing
        } else {
            Valuation::Finite(v)
        }
    }

    pub fn is_unit(&self, x: &BigUint) -> bool {
        !(x % self.prime).is_zero()
    }

    /// Inverse of a unit modulo `p^N`.
    pub fn inverse(&self, x: &BigUint) -> Result<BigUint> {
        if !self.is_unit(x) {
            let valuation = self.valuation(x).capped(self.precision);
            return Err(Error::NotAUnit { valuation });
        }
        Ok(x.modinv(self.modulus()).expect("units are invertible modulo p^N"))
    }

    /// Exact division of `x` by `p^k`, valid when `v_p(x) >= k`; the result
    /// is meaningful modulo `p^(N-k)`.
    pub fn shift_down(&self, x: &BigUint, k: u32) -> BigUint {
        x / self.p_pow(k)
    }

    /// Re-express a residue in another ring of the same prime via its
    /// balanced representative. Exact for elements whose balanced
    /// representative is the intended integer.
    pub fn transfer(&self, x: &BigUint, target: &PAdicRing) -> BigUint {
        debug_assert_eq!(self.prime, target.prime);
        target.from_bigint(&self.balanced(x))
    }
}

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of Z_p known modulo `p^N`.
#[derive(Clone)]
pub struct PAdicInt {
    ring: Arc<PAdicRing>,
    residue: BigUint,
}

impl PAdicInt {
    pub fn new(ring: &Arc<PAdicRing>, residue: BigUint) -> Self {
        let residue = ring.reduce(&residue);
        PAdicInt {
            ring: ring.clone(),
            residue,
        }
    }

    pub fn from_i64(ring: &Arc<PAdicRing>, x: i64) -> Self {
        PAdicInt {
            ring: ring.clone(),
            residue: ring.from_i64(x),
        }
    }

    pub fn from_bigint(ring: &Arc<PAdicRing>, x: &BigInt) -> Self {
        PAdicInt {
            ring: ring.clone(),
            residue: ring.from_bigint(x),
        }
    }

    pub fn zero(ring: &Arc<PAdicRing>) -> Self {
        PAdicInt {
            ring: ring.clone(),
            residue: BigUint::zero(),
        }
    }

    pub fn one(ring: &Arc<PAdicRing>) -> Self {
        PAdicInt::from_i64(ring, 1)
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        &self.ring
    }

    pub fn prime(&self) -> u32 {
        self.ring.prime
    }

    pub fn precision(&self) -> u32 {
        self.ring.precision
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn to_balanced(&self) -> BigInt {
        self.ring.balanced(&self.residue)
    }

    pub fn valuation(&self) -> Valuation {
        self.ring.valuation(&self.residue)
    }

    pub fn is_unit(&self) -> bool {
        self.ring.is_unit(&self.residue)
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.residue.is_zero()
    }

    pub fn invert_unit(&self) -> Result<PAdicInt> {
        Ok(PAdicInt {
            ring: self.ring.clone(),
            residue: self.ring.inverse(&self.residue)?,
        })
    }

    /// Both operands brought to the smaller of the two precisions.
    fn common(&self, other: &PAdicInt) -> (Arc<PAdicRing>, BigUint, BigUint) {
        assert_eq!(self.prime(), other.prime(), "mixing different primes");
        let ring = if self.precision() <= other.precision() {
            self.ring.clone()
        } else {
            other.ring.clone()
        };
        (ring.clone(), ring.reduce(&self.residue), ring.reduce(&other.residue))
    }

    pub fn add(&self, other: &PAdicInt) -> PAdicInt {
        let (ring, a, b) = self.common(other);
        let residue = ring.add(&a, &b);
        PAdicInt { ring, residue }
    }

    pub fn sub(&self, other: &PAdicInt) -> PAdicInt {
        let (ring, a, b) = self.common(other);
        let residue = ring.sub(&a, &b);
        PAdicInt { ring, residue }
    }

    pub fn mul(&self, other: &PAdicInt) -> PAdicInt {
        let (ring, a, b) = self.common(other);
        let residue = ring.mul(&a, &b);
        PAdicInt { ring, residue }
    }

    pub fn neg(&self) -> PAdicInt {
        PAdicInt {
            ring: self.ring.clone(),
            residue: self.ring.neg(&self.residue),
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        self.to_balanced().to_i64()
    }
}

impl PartialEq for PAdicInt {
    fn eq(&self, other: &Self) -> bool {
        self.ring.same_as(&other.ring) && self.residue == other.residue
    }
}

impl Eq for PAdicInt {}

impl fmt::Debug for PAdicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (mod {}^{})",
            self.to_balanced(),
            self.ring.prime,
            self.ring.precision
        )
    }
}

impl fmt::Display for PAdicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_balanced())
    }
}

/// Dense row-major matrix over Z_p at a shared precision.
#[derive(Clone)]
pub struct PAdicMatrix {
    ring: Arc<PAdicRing>,
    rows: usize,
    cols: usize,
    data: Vec<BigUint>,
}

impl PAdicMatrix {
    pub fn zeros(ring: &Arc<PAdicRing>, rows: usize, cols: usize) -> Self {
        PAdicMatrix {
            ring: ring.clone(),
            rows,
            cols,
            data: vec![BigUint::zero(); rows * cols],
        }
    }

    pub fn identity(ring: &Arc<PAdicRing>, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.data[i * n + i] = BigUint::one();
        }
        m
    }

    pub fn from_i64_rows(ring: &Arc<PAdicRing>, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(ring, r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged matrix literal");
            for (j, &x) in row.iter().enumerate() {
                m.data[i * c + j] = ring.from_i64(x);
            }
        }
        m
    }

    pub fn diagonal(ring: &Arc<PAdicRing>, entries: &[PAdicInt]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(ring, n, n);
        for (i, e) in entries.iter().enumerate() {
            m.data[i * n + i] = ring.reduce(e.residue());
        }
        m
    }

    pub fn ring(&self) -> &Arc<PAdicRing> {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> PAdicInt {
        PAdicInt {
            ring: self.ring.clone(),
            residue: self.data[i * self.cols + j].clone(),
        }
    }

    pub fn raw(&self, i: usize, j: usize) -> &BigUint {
        &self.data[i * self.cols + j]
    }

    pub fn set_raw(&mut self, i: usize, j: usize, x: BigUint) {
        let r = self.ring.reduce(&x);
        self.data[i * self.cols + j] = r;
    }

    pub fn mul(&self, other: &PAdicMatrix) -> Result<PAdicMatrix> {
        if !self.ring.same_as(&other.ring) {
            return Err(Error::IncompatiblePrecision {
                left: self.ring.describe(),
                right: other.ring.describe(),
            });
        }
        if self.cols != other.rows {
            return Err(Error::InvalidConfig(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = PAdicMatrix::zeros(&self.ring, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = BigUint::zero();
                for k in 0..self.cols {
                    let a = &self.data[i * self.cols + k];
                    let b = &other.data[k * other.cols + j];
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                out.data[i * other.cols + j] = acc % self.ring.modulus();
            }
        }
        Ok(out)
    }

    /// Smith-form pivot valuations by p-adic elimination.
    ///
    /// Pivots are chosen with minimal valuation (ties: lowest row, then
    /// column). Minimal-valuation pivoting loses no precision, so every
    /// finite pivot is exact. Independent blocks of the sparsity pattern
    /// are eliminated separately.
    pub fn elementary_divisors(&self) -> ElementaryDivisors {
        let expected = self.rows.min(self.cols);
        let mut valuations = Vec::with_capacity(expected);
        for (rows, cols) in self.components() {
            eliminate_block(self, &rows, &cols, &mut valuations);
        }
        let n = self.ring.precision;
        let certified = valuations.len() == expected && valuations.iter().all(|&v| v < n);
        valuations.resize(expected, n);
        valuations.sort_unstable();
        ElementaryDivisors {
            valuations,
            certified,
            precision: n,
        }
    }

    /// Connected components of the bipartite row/column graph of nonzero
    /// entries. Rows or columns without nonzero entries are dropped.
    fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let total = self.rows + self.cols;
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut touched = vec![false; total];
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self.data[i * self.cols + j].is_zero() {
                    touched[i] = true;
                    touched[self.rows + j] = true;
                    let a = find(&mut parent, i);
                    let b = find(&mut parent, self.rows + j);
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
        for x in (0..total).filter(|&x| touched[x]) {
            let root = find(&mut parent, x);
            let idx = match groups.iter().position(|g| g.0 == root) {
                Some(i) => i,
                None => {
                    groups.push((root, Vec::new(), Vec::new()));
                    groups.len() - 1
                }
            };
            if x < self.rows {
                groups[idx].1.push(x);
            } else {
                groups[idx].2.push(x - self.rows);
            }
        }
        groups.into_iter().map(|(_, r, c)| (r, c)).collect()
    }
}

fn eliminate_block(m: &PAdicMatrix, rows: &[usize], cols: &[usize], out: &mut Vec<u32>) {
    let ring = &m.ring;
    let nr = rows.len();
    let nc = cols.len();
    let mut a: Vec<BigUint> = Vec::with_capacity(nr * nc);
    for &i in rows {
        for &j in cols {
            a.push(m.data[i * m.cols + j].clone());
        }
    }
    let mut vals: Vec<Valuation> = a.iter().map(|x| ring.valuation(x)).collect();
    let mut row_alive = vec![true; nr];
    let mut col_alive = vec![true; nc];
    for _ in 0..nr.min(nc) {
        let mut best: Option<(usize, usize, u32)> = None;
        for i in (0..nr).filter(|&i| row_alive[i]) {
            for j in (0..nc).filter(|&j| col_alive[j]) {
                if let Valuation::Finite(v) = vals[i * nc + j] {
                    if best.is_none_or(|(_, _, bv)| v < bv) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let Some((pr, pc, v)) = best else {
            // everything left vanishes at precision
            return;
        };
        out.push(v);
        let unit = ring.reduce(&ring.shift_down(&a[pr * nc + pc], v));
        let unit_inv = ring.inverse(&unit).expect("pivot unit part is a unit");
        for i in (0..nr).filter(|&i| row_alive[i] && i != pr) {
            let e = &a[i * nc + pc];
            if e.is_zero() {
                continue;
            }
            let q = ring.mul(&ring.shift_down(e, v), &unit_inv);
            for j in (0..nc).filter(|&j| col_alive[j] && j != pc) {
                let b = &a[pr * nc + j];
                if b.is_zero() {
                    continue;
                }
                let updated = ring.sub_mul(&a[i * nc + j], &q, b);
                vals[i * nc + j] = ring.valuation(&updated);
                a[i * nc + j] = updated;
            }
            a[i * nc + pc] = BigUint::zero();
            vals[i * nc + pc] = Valuation::Vanishing;
        }
        row_alive[pr] = false;
        col_alive[pc] = false;
    }
}

impl PartialEq for PAdicMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.ring.same_as(&other.ring) && self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl fmt::Debug for PAdicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "PAdicMatrix {}x{} over {}",
            self.rows,
            self.cols,
            self.ring.describe()
        )?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.ring.balanced(&self.data[i * self.cols + j]).to_string())
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Pivot valuations of a p-adic matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryDivisors {
    /// Nondecreasing; a pivot that vanished at precision is recorded as `precision`.
    pub valuations: Vec<u32>,
    /// False when some pivot was indistinguishable from zero.
    pub certified: bool,
    /// Precision at which the pivots are exact.
    pub precision: u32,
}

impl ElementaryDivisors {
    /// `log_p` of the cokernel cardinality, when certified.
    pub fn total(&self) -> Option<u64> {
        self.certified.then(|| self.valuations.iter().map(|&v| v as u64).sum())
    }
}
