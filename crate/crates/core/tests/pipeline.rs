use std::sync::Arc;

use iwasawa_core::bertini::{ramification_locus, restrict_scalars, MonogenicExtension};
use iwasawa_core::charideal::{characteristic_ideal, local_length, HeightOnePrime, PresentationModule};
use iwasawa_core::harness::{check_outside_p, check_over_p, render_kv, HarnessConfig, Verdict};
use iwasawa_core::lambda::{weierstrass_prepare, PowerSeries};
use iwasawa_core::padic::PAdicRing;
use iwasawa_core::parse::{parse_extension_series, parse_family, parse_matrix_series, parse_series};
use iwasawa_core::specialize::{element, quotient_valuation, FamilyKind, SpecializationFamily, UnitRule};
use iwasawa_core::Error;

const D: usize = 64;

fn ring() -> Arc<PAdicRing> {
    PAdicRing::new(3, 40).unwrap()
}

fn module(src: &str) -> PresentationModule {
    PresentationModule::new(parse_matrix_series(src, &ring(), D).unwrap()).unwrap()
}

#[test]
fn preparation_from_literals() {
    let ring = ring();
    let w = weierstrass_prepare(&parse_series("T^2 - 2*T - 3", &ring, D).unwrap()).unwrap();
    assert_eq!(
        (w.mu, w.distinguished.to_string(), w.unit.to_string()),
        (0, "-3 + T".into(), "1 + T".into())
    );

    let w = weierstrass_prepare(&parse_series("6 + 3*T", &ring, D).unwrap()).unwrap();
    assert_eq!((w.mu, w.lambda(), w.unit.to_string()), (1, 0, "2 + T".into()));
}

#[test]
fn characteristic_ideals_from_literals() {
    assert_eq!(
        characteristic_ideal(&module("[3, 0; 0, T]"), &[]).unwrap().to_string(),
        "mu=1, factors=[(T,1)]"
    );
    assert_eq!(
        characteristic_ideal(&module("[T, 3; 0, T]"), &[]).unwrap().to_string(),
        "mu=0, factors=[(T,2)]"
    );
    let m = module("[9, 0; 0, T]");
    assert_eq!(local_length(&m, &HeightOnePrime::OverP).unwrap(), 2);
    let rows = parse_matrix_series("[0, 0; 0, 0]", &ring(), D).unwrap();
    assert_eq!(PresentationModule::new(rows).unwrap_err(), Error::NotTorsionAtPrecision);
}

#[test]
fn family_literal_drives_specialization() {
    let ring = ring();
    let lit = parse_family("L,T,0,const:1,4").unwrap();
    assert_eq!(lit.kind, FamilyKind::OutsideP);
    let z = PowerSeries::from_bigints(&ring, D, &lit.z);
    let fam = SpecializationFamily::outside_p(z, lit.units).unwrap();
    let x = element(&fam, 2).unwrap();
    assert_eq!(x.x.to_string(), "9 + T");
    let report = quotient_valuation(&module("[T^2]"), &x).unwrap();
    assert_eq!(report.valuation, Some(4));
    assert_eq!(quotient_valuation(&module("[9]"), &x).unwrap().valuation, Some(2));
}

#[test]
fn harness_from_literals() {
    let ring = ring();
    let config = HarnessConfig::new(12);
    let r = check_outside_p(&module("[T]"), &module("[T^2]"), None, &config).unwrap();
    assert_eq!(r.verdict, Verdict::Agree);
    assert!(render_kv(&r).starts_with("theorem=outside-p\nprime=3\nn_max=12\nverdict=agree\n"));

    let mut config = HarnessConfig::new(12);
    config.units = vec![UnitRule::Const(1), UnitRule::Seeded(5)];
    let r = check_over_p(&module("[3]"), &module("[9]"), &PowerSeries::t(&ring, D), &config).unwrap();
    assert_eq!(r.verdict, Verdict::Agree);
    assert_eq!(r.families.len(), 2);
}

#[test]
fn bertini_from_literals() {
    let ring = ring();
    for (h, resultant, primes) in [
        ("S^2 - T", "-4*T", vec!["(T)"]),
        ("S^2 - 3", "-12", vec!["(3)"]),
        ("S^2 + S + T", "-1 + 4*T", vec![]),
    ] {
        let ext = MonogenicExtension::new(parse_extension_series(h, &ring, D).unwrap()).unwrap();
        let locus = ramification_locus(&ext).unwrap();
        assert_eq!(locus.resultant.to_string(), resultant, "{h}");
        let labels: Vec<String> = locus.primes.iter().map(|q| q.label(3)).collect();
        assert_eq!(labels, primes, "{h}");
    }
    let err = MonogenicExtension::new(parse_extension_series("S^2", &ring, D).unwrap()).unwrap_err();
    assert_eq!(err, Error::InseparableAtPrecision);
}

#[test]
fn restriction_of_scalars_from_literals() {
    let ring = ring();
    let ext = MonogenicExtension::new(parse_extension_series("S^2 - T", &ring, D).unwrap()).unwrap();
    let s = vec![PowerSeries::zero(&ring, D), PowerSeries::one(&ring, D)];
    let m = restrict_scalars(&ext, &[vec![s]]).unwrap();
    assert_eq!(m.to_string(), "[0, 1; T, 0]");
    assert_eq!(
        characteristic_ideal(&m, &[]).unwrap().to_string(),
        "mu=0, factors=[(T,1)]"
    );
}
