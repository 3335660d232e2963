use std::sync::Arc;

use num_bigint::BigInt;
use proptest::prelude::*;

use iwasawa_core::bertini::{restrict_scalars, sylvester_resultant, MonogenicExtension};
use iwasawa_core::charideal::{
    characteristic_ideal, compare_at_primes, fitting_generator, fundamental_module, local_length, HeightOnePrime,
    PresentationModule,
};
use iwasawa_core::lambda::{weierstrass_prepare, DistinguishedPoly, PowerSeries};
use iwasawa_core::padic::{PAdicInt, PAdicMatrix, PAdicRing, Valuation};
use iwasawa_core::specialize::{element, quotient_valuation, SpecializationFamily, UnitRule};

const P: u32 = 3;
const N: u32 = 30;
const D: usize = 32;

fn ring() -> Arc<PAdicRing> {
    PAdicRing::new(P, N).unwrap()
}

fn pool(ring: &Arc<PAdicRing>) -> Vec<DistinguishedPoly> {
    [
        vec![0, 1],
        vec![3, 1],
        vec![-3, 1],
        vec![3, 3, 1],
        vec![3, 0, 1],
        vec![3, 0, 0, 1],
    ]
    .iter()
    .map(|c| DistinguishedPoly::from_i64s(ring, c).unwrap())
    .collect()
}

#[derive(Debug, Clone)]
struct Shape {
    over_p: Vec<u32>,
    outside_p: Vec<(usize, u32)>,
}

fn shape() -> impl Strategy<Value = Shape> {
    (
        prop::collection::vec(1u32..=2, 0..=2),
        prop::sample::subsequence((0..6usize).collect::<Vec<_>>(), 0..=3),
        prop::collection::vec(1u32..=2, 3),
    )
        .prop_map(|(over_p, idx, exps)| Shape {
            over_p,
            outside_p: idx.into_iter().zip(exps).collect(),
        })
}

fn module(s: &Shape, ring: &Arc<PAdicRing>) -> PresentationModule {
    let pool = pool(ring);
    let outside: Vec<_> = s.outside_p.iter().map(|&(i, f)| (pool[i].clone(), f)).collect();
    fundamental_module(ring, D, &s.over_p, &outside).unwrap()
}

fn v_int(x: i64) -> u32 {
    let mut x = x.abs();
    let mut v = 0;
    while x % P as i64 == 0 {
        x /= P as i64;
        v += 1;
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn valuation_is_additive(a in 1i64..100_000, b in 1i64..100_000) {
        let ring = ring();
        let x = PAdicInt::from_i64(&ring, a);
        let y = PAdicInt::from_i64(&ring, b);
        prop_assert_eq!(x.mul(&y).valuation(), Valuation::Finite(v_int(a) + v_int(b)));
    }

    #[test]
    fn unit_inverse_round_trips(a in 1i64..1_000_000) {
        prop_assume!(a % 3 != 0);
        let ring = ring();
        let x = PAdicInt::from_i64(&ring, a);
        prop_assert_eq!(x.mul(&x.invert_unit().unwrap()), PAdicInt::one(&ring));
    }

    #[test]
    fn elementary_divisors_of_diagonal_are_sorted_valuations(
        entries in prop::collection::vec(1i64..10_000, 1..6),
    ) {
        let ring = ring();
        let diag: Vec<PAdicInt> = entries.iter().map(|&e| PAdicInt::from_i64(&ring, e)).collect();
        let ed = PAdicMatrix::diagonal(&ring, &diag).elementary_divisors();
        let mut expected: Vec<u32> = entries.iter().map(|&e| v_int(e)).collect();
        expected.sort_unstable();
        let got = ed.valuations.clone();
        prop_assert!(ed.certified);
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn elementary_divisors_sum_to_determinant_valuation(
        cells in prop::collection::vec(-30i64..30, 9),
    ) {
        let ring = ring();
        let rows: Vec<Vec<i64>> = cells.chunks(3).map(<[i64]>::to_vec).collect();
        let det = rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
            - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
            + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]);
        prop_assume!(det != 0);
        let ed = PAdicMatrix::from_i64_rows(&ring, &rows).elementary_divisors();
        prop_assert_eq!(ed.total(), Some(v_int(det) as u64));
    }

    #[test]
    fn elementary_divisors_are_invariant_under_unimodular_change(
        cells in prop::collection::vec(-30i64..30, 4),
        k in -20i64..20,
    ) {
        let ring = ring();
        let a = PAdicMatrix::from_i64_rows(&ring, &[cells[..2].to_vec(), cells[2..].to_vec()]);
        let u = PAdicMatrix::from_i64_rows(&ring, &[vec![1, k], vec![0, 1]]);
        let l = PAdicMatrix::from_i64_rows(&ring, &[vec![1, 0], vec![k, 1]]);
        let b = l.mul(&a).unwrap().mul(&u).unwrap();
        prop_assert_eq!(a.elementary_divisors().valuations, b.elementary_divisors().valuations);
    }

    #[test]
    fn weierstrass_reconstructs(
        unit_at in 0usize..8,
        low in prop::collection::vec(-50i64..50, 8),
        high in prop::collection::vec(-1000i64..1000, 0..12),
        lead in 1i64..3,
        mu in 0u32..3,
    ) {
        let ring = ring();
        let mut coeffs: Vec<i64> = low[..unit_at].iter().map(|c| 3 * c).collect();
        coeffs.push(3 * low[unit_at] + lead);
        coeffs.extend(high);
        let scale = 3i64.pow(mu);
        let big: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c * scale)).collect();
        let f = PowerSeries::from_bigints(&ring, D, &big);
        let w = weierstrass_prepare(&f).unwrap();
        prop_assert_eq!(w.mu, mu);
        prop_assert_eq!(w.lambda(), unit_at);
        prop_assert!(w.unit.is_unit());
        let diff = w.reconstruct().unwrap().sub(&f).unwrap();
        prop_assert!(diff.valuation().capped(N) >= N - mu - 2);
    }

    #[test]
    fn char_ideal_is_additive(a in shape(), b in shape()) {
        let ring = ring();
        let pool = pool(&ring);
        let (ma, mb) = (module(&a, &ring), module(&b, &ring));
        let sum = ma.direct_sum(&mb).unwrap();
        let (ca, cb, cs) = (
            characteristic_ideal(&ma, &pool).unwrap(),
            characteristic_ideal(&mb, &pool).unwrap(),
            characteristic_ideal(&sum, &pool).unwrap(),
        );
        prop_assert_eq!(cs.mu, ca.mu + cb.mu);
        prop_assert_eq!(cs.lambda(), ca.lambda() + cb.lambda());
        for g in &pool {
            prop_assert_eq!(cs.multiplicity_of(g), ca.multiplicity_of(g) + cb.multiplicity_of(g));
        }
    }

    #[test]
    fn fitting_generator_of_fundamental_module_is_the_product(s in shape()) {
        let ring = ring();
        let pool = pool(&ring);
        let mut product = PowerSeries::one(&ring, D);
        for &e in &s.over_p {
            product = product.mul_p_pow(e);
        }
        for &(i, f) in &s.outside_p {
            product = product.mul(&pool[i].pow(f).to_series(D).unwrap()).unwrap();
        }
        prop_assert_eq!(fitting_generator(&module(&s, &ring)), product);
    }

    #[test]
    fn local_lengths_reconstruct_invariants(s in shape()) {
        let ring = ring();
        let m = module(&s, &ring);
        let c = characteristic_ideal(&m, &pool(&ring)).unwrap();
        let mut lambda = 0;
        for f in &c.factors {
            let q = HeightOnePrime::OutsideP(f.poly.clone());
            let len = local_length(&m, &q).unwrap();
            prop_assert_eq!(len, f.multiplicity);
            lambda += len as usize * f.poly.degree();
        }
        prop_assert_eq!(lambda, c.lambda());
        prop_assert_eq!(local_length(&m, &HeightOnePrime::OverP).unwrap(), c.mu);
    }

    #[test]
    fn quotient_valuation_is_additive_over_direct_sums(
        a in shape(),
        b in shape(),
        zi in 0usize..6,
        n in 1u32..6,
        over in any::<bool>(),
    ) {
        let ring = ring();
        let z = pool(&ring)[zi].to_series(D).unwrap();
        let fam = if over {
            SpecializationFamily::over_p(z, PowerSeries::zero(&ring, D), UnitRule::Const(1)).unwrap()
        } else {
            SpecializationFamily::outside_p(z, UnitRule::Const(1)).unwrap()
        };
        let Ok(x) = element(&fam, n) else { return Ok(()); };
        let (ma, mb) = (module(&a, &ring), module(&b, &ring));
        let va = quotient_valuation(&ma, &x).unwrap();
        let vb = quotient_valuation(&mb, &x).unwrap();
        let vs = quotient_valuation(&ma.direct_sum(&mb).unwrap(), &x).unwrap();
        match (va.valuation, vb.valuation, vs.valuation) {
            (Some(va), Some(vb), Some(vs)) => prop_assert_eq!(vs, va + vb),
            (_, _, vs) => prop_assert!(vs.is_none()),
        }
    }

    #[test]
    fn swapping_modules_flips_comparison(a in shape(), b in shape()) {
        let ring = ring();
        let (ma, mb) = (module(&a, &ring), module(&b, &ring));
        let mut primes: Vec<HeightOnePrime> = pool(&ring).into_iter().map(HeightOnePrime::OutsideP).collect();
        primes.push(HeightOnePrime::OverP);
        let ab = compare_at_primes(&ma, &mb, &primes).unwrap();
        let ba = compare_at_primes(&mb, &ma, &primes).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert_eq!(x.length_m, y.length_n);
            prop_assert_eq!(x.length_n, y.length_m);
            let delta_xy = x.length_n as i64 - x.length_m as i64;
            let delta_yx = y.length_n as i64 - y.length_m as i64;
            prop_assert_eq!(delta_xy, -delta_yx);
        }
    }

    #[test]
    fn resultant_of_pure_square_is_associate_of_u(u in prop::collection::vec(-20i64..20, 1..5)) {
        let ring = ring();
        let u = PowerSeries::from_i64s(&ring, D, &u);
        prop_assume!(!u.is_zero_at_precision());
        let zero = PowerSeries::zero(&ring, D);
        let one = PowerSeries::one(&ring, D);
        let h = vec![u.neg(), zero.clone(), one];
        let dh = vec![zero, PowerSeries::constant(&ring, D, 2)];
        let r = sylvester_resultant(&h, &dh).unwrap();
        prop_assert_eq!(r, u.scale_i64(-4));
    }

    #[test]
    fn restrict_scalars_is_multiplicative_on_block_sums(
        a in prop::collection::vec(-9i64..9, 1..3),
        b in prop::collection::vec(-9i64..9, 1..3),
        c0 in 1i64..5,
    ) {
        let ring = ring();
        let t = PowerSeries::t(&ring, D);
        let ext = MonogenicExtension::new(vec![t.neg(), PowerSeries::zero(&ring, D), PowerSeries::one(&ring, D)])
            .unwrap();
        let entry = |v: &[i64], shift: i64| -> Vec<PowerSeries> {
            let mut coeffs: Vec<PowerSeries> = v.iter().map(|&c| PowerSeries::constant(&ring, D, c)).collect();
            coeffs[0] = coeffs[0].add(&PowerSeries::constant(&ring, D, shift).add(&t).unwrap()).unwrap();
            coeffs
        };
        let (ea, eb) = (entry(&a, c0), entry(&b, 3 * c0));
        let zero = vec![PowerSeries::zero(&ring, D)];
        let single_a = restrict_scalars(&ext, &[vec![ea.clone()]]);
        let single_b = restrict_scalars(&ext, &[vec![eb.clone()]]);
        let (Ok(ma), Ok(mb)) = (single_a, single_b) else { return Ok(()); };
        let block = restrict_scalars(&ext, &[vec![ea, zero.clone()], vec![zero, eb]]).unwrap();
        prop_assert_eq!(block.size(), ma.size() + mb.size());
        let product = fitting_generator(&ma).mul(&fitting_generator(&mb)).unwrap();
        prop_assert_eq!(fitting_generator(&block), product);
    }
}
