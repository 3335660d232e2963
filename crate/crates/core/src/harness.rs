//! Consistency checks between divisibility of characteristic ideals and the
//! growth of `|N/x_n N| / |M/x_n M|` along specialization families.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::charideal::{characteristic_ideal, compare_at_primes, HeightOnePrime, PresentationModule, PrimeComparison};
use crate::error::{Error, Result};
use crate::lambda::{poly_multiplicity, DistinguishedPoly, PowerSeries};
use crate::specialize::{
    element, quotient_valuation_at, select_base_outside_p, select_r_over_p, FamilyKind, SpecializationFamily, UnitRule,
};

/// `|slope|` below this counts as bounded.
pub const SLOPE_NOISE: f64 = 0.25;

/// Minimum number of certified deficiency values per family.
pub const MIN_CERTIFIED: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    OutsideP,
    OverP,
}

impl Theorem {
    pub fn label(self) -> &'static str {
        match self {
            Theorem::OutsideP => "outside-p",
            Theorem::OverP => "over-p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Side A (local inclusions) and side B (bounded deficiency) agree.
    Agree,
    /// Side A and side B disagree.
    DivergenceDetected,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Agree => "agree",
            Verdict::DivergenceDetected => "divergence-detected",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Measured {
        v_m: u64,
        v_n: u64,
    },
    /// `x_n` lies in a support prime, or is degenerate.
    Skipped(String),
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub n: u32,
    pub outcome: Outcome,
}

impl Sample {
    pub fn delta(&self) -> Option<i64> {
        match self.outcome {
            Outcome::Measured { v_m, v_n } => Some(v_n as i64 - v_m as i64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FamilyTrace {
    pub z: String,
    pub units: UnitRule,
    pub samples: Vec<Sample>,
    pub slope: Option<f64>,
    pub c_estimate: Option<u32>,
    /// Estimate over `n <= nMax / 2`.
    pub c_estimate_half: Option<u32>,
}

impl FamilyTrace {
    pub fn deltas(&self) -> Vec<(u32, i64)> {
        self.samples
            .iter()
            .filter_map(|s| s.delta().map(|d| (s.n, d)))
            .collect()
    }

    pub fn skipped(&self) -> Vec<u32> {
        self.samples
            .iter()
            .filter(|s| matches!(s.outcome, Outcome::Skipped(_)))
            .map(|s| s.n)
            .collect()
    }

    pub fn uncertified(&self) -> Vec<u32> {
        self.samples
            .iter()
            .filter(|s| s.outcome == Outcome::Uncertified)
            .map(|s| s.n)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub theorem: Theorem,
    pub prime: u32,
    pub n_max: u32,
    pub side_a: Vec<PrimeComparison>,
    pub families: Vec<FamilyTrace>,
    /// Largest `c_estimate` over the families.
    pub c_estimate: Option<u32>,
    /// Most negative family slope.
    pub slope: Option<f64>,
    pub verdict: Verdict,
    /// Some family's deficiency decreases without bound.
    pub divergent: bool,
    pub reasons: Vec<String>,
}

impl TheoremReport {
    pub fn side_a_holds(&self) -> bool {
        self.side_a.iter().all(|c| c.inclusion)
    }
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub n_max: u32,
    /// One family is built per target and unit rule.
    pub units: Vec<UnitRule>,
}

impl HarnessConfig {
    pub fn new(n_max: u32) -> Self {
        HarnessConfig {
            n_max,
            units: vec![UnitRule::Const(1)],
        }
    }
}

/// Check the outside-p theorem on `(M, N)`. Without explicit targets the
/// distinct irreducible factors of both characteristic ideals are used.
pub fn check_outside_p(
    m: &PresentationModule,
    n: &PresentationModule,
    targets: Option<&[DistinguishedPoly]>,
    config: &HarnessConfig,
) -> Result<TheoremReport> {
    let support = support_outside_p(m, n)?;
    let targets: Vec<DistinguishedPoly> = match targets {
        Some(t) => t.to_vec(),
        None => support.clone(),
    };
    let primes: Vec<HeightOnePrime> = targets.iter().cloned().map(HeightOnePrime::OutsideP).collect();
    let side_a = compare_at_primes(m, n, &primes)?;
    let d = m.t_precision();
    let mut families = Vec::new();
    for (i, target) in targets.iter().enumerate() {
        let avoid: Vec<DistinguishedPoly> = targets
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, g)| g.clone())
            .collect();
        let z = select_base_outside_p(target, &avoid, d)?;
        for &units in &config.units {
            families.push(SpecializationFamily::outside_p(z.clone(), units)?);
        }
    }
    run(Theorem::OutsideP, m, n, side_a, &families, &support, config)
}

/// Check the over-p theorem on `(M, N)` along `z^n + a_n p`.
pub fn check_over_p(
    m: &PresentationModule,
    n: &PresentationModule,
    z: &PowerSeries,
    config: &HarnessConfig,
) -> Result<TheoremReport> {
    let support = support_outside_p(m, n)?;
    let side_a = compare_at_primes(m, n, &[HeightOnePrime::OverP])?;
    let r = select_r_over_p(z.ring(), z.t_precision());
    let families = config
        .units
        .iter()
        .map(|&u| SpecializationFamily::over_p(z.clone(), r.clone(), u))
        .collect::<Result<Vec<_>>>()?;
    run(Theorem::OverP, m, n, side_a, &families, &support, config)
}

/// Run either theorem along one explicitly supplied family.
pub fn check_with_family(
    m: &PresentationModule,
    n: &PresentationModule,
    family: &SpecializationFamily,
    config: &HarnessConfig,
) -> Result<TheoremReport> {
    let support = support_outside_p(m, n)?;
    let (theorem, primes) = match family.kind {
        FamilyKind::OutsideP => (
            Theorem::OutsideP,
            support
                .iter()
                .cloned()
                .map(HeightOnePrime::OutsideP)
                .collect::<Vec<_>>(),
        ),
        FamilyKind::OverP => (Theorem::OverP, vec![HeightOnePrime::OverP]),
    };
    let side_a = compare_at_primes(m, n, &primes)?;
    run(theorem, m, n, side_a, std::slice::from_ref(family), &support, config)
}

/// Irreducible factors outside p of either characteristic ideal.
fn support_outside_p(m: &PresentationModule, n: &PresentationModule) -> Result<Vec<DistinguishedPoly>> {
    let mut out: Vec<DistinguishedPoly> = Vec::new();
    let mut known: Vec<DistinguishedPoly> = Vec::new();
    for module in [m, n] {
        if let Some(f) = module.fundamental_data() {
            known.extend(f.outside_p.iter().map(|(g, _)| g.clone()));
        }
    }
    for module in [m, n] {
        let c = characteristic_ideal(module, &known)?;
        if let Some(r) = c.residual {
            return Err(Error::PartialFactorization {
                residual_degree: r.degree(),
            });
        }
        for f in c.factors {
            let g = f.poly.transfer(m.ring());
            if !out.iter().any(|x| x.same_prime_ideal(&g)) {
                out.push(g);
            }
        }
    }
    Ok(out)
}

fn run(
    theorem: Theorem,
    m: &PresentationModule,
    n: &PresentationModule,
    side_a: Vec<PrimeComparison>,
    families: &[SpecializationFamily],
    support: &[DistinguishedPoly],
    config: &HarnessConfig,
) -> Result<TheoremReport> {
    if config.n_max == 0 {
        return Err(Error::InvalidConfig("nMax must be at least 1".into()));
    }
    let mut traces = Vec::with_capacity(families.len());
    for fam in families {
        let samples = (1..=config.n_max)
            .into_par_iter()
            .map(|k| sample(m, n, fam, support, k))
            .collect::<Result<Vec<_>>>()?;
        traces.push(trace(fam, samples, config.n_max));
    }

    let mut reasons = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        let certified = t.deltas().len();
        if certified < MIN_CERTIFIED {
            reasons.push(format!("family {i}: only {certified} certified values"));
        }
        if !t.uncertified().is_empty() {
            reasons.push(format!("family {i}: uncertified at n = {:?}", t.uncertified()));
        }
        if t.skipped().len() > support.len() {
            reasons.push(format!(
                "family {i}: {} skipped indices exceed the support size",
                t.skipped().len()
            ));
        }
        if t.slope.is_none() && certified >= MIN_CERTIFIED {
            reasons.push(format!("family {i}: tail too short for a slope"));
        }
    }

    let slope = traces.iter().filter_map(|t| t.slope).min_by(|a, b| a.total_cmp(b));
    let c_estimate = traces.iter().filter_map(|t| t.c_estimate).max();
    let divergent = traces.iter().any(|t| t.slope.is_some_and(|s| s < -SLOPE_NOISE));
    let side_a_holds = side_a.iter().all(|c| c.inclusion);
    let bounded = traces
        .iter()
        .all(|t| t.slope.is_some_and(|s| s >= -SLOPE_NOISE) && t.c_estimate == t.c_estimate_half);

    let verdict = if !reasons.is_empty() {
        Verdict::Inconclusive
    } else if side_a_holds == bounded {
        Verdict::Agree
    } else {
        Verdict::DivergenceDetected
    };

    Ok(TheoremReport {
        theorem,
        prime: m.ring().prime(),
        n_max: config.n_max,
        side_a,
        families: traces,
        c_estimate,
        slope,
        verdict,
        divergent,
        reasons,
    })
}

fn sample(
    m: &PresentationModule,
    n: &PresentationModule,
    fam: &SpecializationFamily,
    support: &[DistinguishedPoly],
    k: u32,
) -> Result<Sample> {
    let skip = |reason: String| {
        Ok(Sample {
            n: k,
            outcome: Outcome::Skipped(reason),
        })
    };
    let x = match element(fam, k) {
        Ok(x) => x,
        Err(Error::DegenerateSpecialization { reason, .. }) => return skip(reason),
        Err(e) => return Err(e),
    };
    for g in support {
        if poly_multiplicity(&x.x.to_poly(), &g.transfer(x.x.ring()))? > 0 {
            return skip(format!("x lies in ({g})"));
        }
    }
    let (_, qm) = quotient_valuation_at(m, fam, k)?;
    let (_, qn) = quotient_valuation_at(n, fam, k)?;
    let outcome = match (qm.valuation, qn.valuation) {
        (Some(v_m), Some(v_n)) => Outcome::Measured { v_m, v_n },
        _ => Outcome::Uncertified,
    };
    Ok(Sample { n: k, outcome })
}

fn trace(fam: &SpecializationFamily, samples: Vec<Sample>, n_max: u32) -> FamilyTrace {
    let deltas: Vec<(u32, i64)> = samples.iter().filter_map(|s| s.delta().map(|d| (s.n, d))).collect();
    let tail_start = tail_start(n_max);
    let tail: Vec<(f64, f64)> = deltas
        .iter()
        .filter(|(k, _)| *k >= tail_start)
        .map(|&(k, d)| (k as f64, d as f64))
        .collect();
    let all: Vec<i64> = deltas.iter().map(|&(_, d)| d).collect();
    let half: Vec<i64> = deltas
        .iter()
        .filter(|(k, _)| *k <= n_max / 2)
        .map(|&(_, d)| d)
        .collect();
    FamilyTrace {
        z: fam.z.to_string(),
        units: fam.units,
        samples,
        slope: least_squares_slope(&tail),
        c_estimate: (!all.is_empty()).then(|| estimate_constant_from(&all)),
        c_estimate_half: (!half.is_empty()).then(|| estimate_constant_from(&half)),
    }
}

/// First index used for the slope fit.
pub fn tail_start(n_max: u32) -> u32 {
    5.min(n_max.div_ceil(2))
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `max(0, -min δ)` over the report, as a p-valuation.
pub fn estimate_constant(report: &TheoremReport) -> Option<u32> {
    report.c_estimate
}

/// `max(0, -min δ)`.
pub fn estimate_constant_from(deltas: &[i64]) -> u32 {
    deltas.iter().map(|&d| (-d).max(0)).max().unwrap_or(0) as u32
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map_or_else(|| "none".into(), |s| format!("{s:.4}"))
}

fn fmt_opt(c: Option<u32>) -> String {
    c.map_or_else(|| "none".into(), |c| c.to_string())
}

/// Flat `key=value` lines in a fixed order.
pub fn render_kv(report: &TheoremReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "theorem={}", report.theorem.label());
    let _ = writeln!(s, "prime={}", report.prime);
    let _ = writeln!(s, "n_max={}", report.n_max);
    let _ = writeln!(s, "verdict={}", report.verdict.label());
    let _ = writeln!(s, "divergent={}", report.divergent);
    let _ = writeln!(s, "c_estimate={}", fmt_opt(report.c_estimate));
    let _ = writeln!(s, "slope={}", fmt_slope(report.slope));
    for (i, c) in report.side_a.iter().enumerate() {
        let _ = writeln!(s, "side_a.{i}.prime={}", c.prime.label(report.prime));
        let _ = writeln!(s, "side_a.{i}.length_m={}", c.length_m);
        let _ = writeln!(s, "side_a.{i}.length_n={}", c.length_n);
        let _ = writeln!(s, "side_a.{i}.inclusion={}", c.inclusion);
    }
    for (i, f) in report.families.iter().enumerate() {
        let _ = writeln!(s, "family.{i}.z={}", f.z);
        let _ = writeln!(s, "family.{i}.units={}", f.units);
        let _ = writeln!(s, "family.{i}.slope={}", fmt_slope(f.slope));
        let _ = writeln!(s, "family.{i}.c_estimate={}", fmt_opt(f.c_estimate));
        let _ = writeln!(s, "family.{i}.c_estimate_half={}", fmt_opt(f.c_estimate_half));
        for sample in &f.samples {
            let value = match &sample.outcome {
                Outcome::Measured { v_m, v_n } => format!("{v_m},{v_n},{}", *v_n as i64 - *v_m as i64),
                Outcome::Skipped(r) => format!("skipped ({r})"),
                Outcome::Uncertified => "uncertified".into(),
            };
            let _ = writeln!(s, "family.{i}.n.{}={value}", sample.n);
        }
    }
    for (i, r) in report.reasons.iter().enumerate() {
        let _ = writeln!(s, "reason.{i}={r}");
    }
    s
}

/// Human-readable summary with one `(n, v_M, v_N, δ)` table per family.
pub fn render_table(report: &TheoremReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "theorem: {}   p = {}   nMax = {}",
        report.theorem.label(),
        report.prime,
        report.n_max
    );
    let _ = writeln!(
        s,
        "verdict: {}{}",
        report.verdict.label(),
        if report.divergent {
            " (divergent deficiency)"
        } else {
            ""
        }
    );
    let _ = writeln!(
        s,
        "c estimate: {}   slope: {}",
        fmt_opt(report.c_estimate),
        fmt_slope(report.slope)
    );
    let _ = writeln!(s, "\n{:<24} {:>6} {:>6}  inclusion", "prime", "l_M", "l_N");
    for c in &report.side_a {
        let _ = writeln!(
            s,
            "{:<24} {:>6} {:>6}  {}",
            c.prime.label(report.prime),
            c.length_m,
            c.length_n,
            c.inclusion
        );
    }
    for f in &report.families {
        let _ = writeln!(
            s,
            "\nfamily z = {}   units {}   slope {}",
            f.z,
            f.units,
            fmt_slope(f.slope)
        );
        let _ = writeln!(s, "{:>4} {:>8} {:>8} {:>8}", "n", "v_M", "v_N", "delta");
        for sample in &f.samples {
            match &sample.outcome {
                Outcome::Measured { v_m, v_n } => {
                    let _ = writeln!(
                        s,
                        "{:>4} {:>8} {:>8} {:>8}",
                        sample.n,
                        v_m,
                        v_n,
                        *v_n as i64 - *v_m as i64
                    );
                }
                Outcome::Skipped(r) => {
                    let _ = writeln!(s, "{:>4} skipped: {r}", sample.n);
                }
                Outcome::Uncertified => {
                    let _ = writeln!(s, "{:>4} uncertified", sample.n);
                }
            }
        }
    }
    for r in &report.reasons {
        let _ = writeln!(s, "note: {r}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PAdicRing;
    use std::sync::Arc;

    fn ring() -> Arc<PAdicRing> {
        PAdicRing::new(3, 40).unwrap()
    }

    fn diag(c: &[i64]) -> PresentationModule {
        PresentationModule::diagonal(vec![PowerSeries::from_i64s(&ring(), 64, c)]).unwrap()
    }

    fn t() -> DistinguishedPoly {
        DistinguishedPoly::t(&ring())
    }

    fn deltas(r: &TheoremReport) -> Vec<i64> {
        r.families[0].deltas().into_iter().map(|(_, d)| d).collect()
    }

    #[test]
    fn outside_p_inclusion() {
        let r = check_outside_p(&diag(&[0, 1]), &diag(&[0, 0, 1]), Some(&[t()]), &HarnessConfig::new(10)).unwrap();
        assert!(r.side_a_holds());
        assert_eq!(deltas(&r), (1..=10).collect::<Vec<_>>());
        assert_eq!(r.verdict, Verdict::Agree);
        assert!(!r.divergent);
        assert_eq!(estimate_constant(&r), Some(0));
    }

    #[test]
    fn outside_p_failure_agrees_with_divergence() {
        let r = check_outside_p(&diag(&[0, 0, 1]), &diag(&[0, 1]), Some(&[t()]), &HarnessConfig::new(10)).unwrap();
        assert!(!r.side_a_holds());
        assert_eq!(deltas(&r), (1..=10).map(|k| -k).collect::<Vec<_>>());
        assert!((r.slope.unwrap() + 1.0).abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Agree);
        assert!(r.divergent);
    }

    #[test]
    fn identity_pair() {
        let m = diag(&[3, 1]);
        let r = check_outside_p(&m, &m, None, &HarnessConfig::new(6)).unwrap();
        assert_eq!(r.verdict, Verdict::Agree);
        assert!(deltas(&r).iter().all(|&d| d == 0));
    }

    #[test]
    fn over_p_examples() {
        let z = PowerSeries::t(&ring(), 64);
        let r = check_over_p(&diag(&[3]), &diag(&[9]), &z, &HarnessConfig::new(8)).unwrap();
        assert_eq!(deltas(&r), (1..=8).collect::<Vec<_>>());
        assert_eq!(r.verdict, Verdict::Agree);
        let r = check_over_p(&diag(&[9]), &diag(&[3]), &z, &HarnessConfig::new(8)).unwrap();
        assert_eq!(deltas(&r), (1..=8).map(|k| -k).collect::<Vec<_>>());
        assert!(!r.side_a_holds());
        assert_eq!(r.verdict, Verdict::Agree);
        assert!(r.divergent);
        let r = check_over_p(&diag(&[3, 1]), &diag(&[3, 1]), &z, &HarnessConfig::new(8)).unwrap();
        assert_eq!(r.verdict, Verdict::Agree);
    }

    #[test]
    fn short_range_is_inconclusive() {
        let r = check_outside_p(&diag(&[0, 1]), &diag(&[0, 0, 1]), Some(&[t()]), &HarnessConfig::new(1)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn constant_estimates() {
        assert_eq!(estimate_constant_from(&[0, 1, 2, 3]), 0);
        assert_eq!(estimate_constant_from(&[-2, -2, -1, 0, 0]), 2);
        assert_eq!(estimate_constant_from(&[-1, -2, -3]), 3);
        assert_eq!(tail_start(20), 5);
        assert_eq!(tail_start(3), 2);
    }

    #[test]
    fn support_hits_are_skipped() {
        // x_1 = T + 3 lies in (T + 3)
        let m = PresentationModule::diagonal(vec![
            PowerSeries::from_i64s(&ring(), 64, &[0, 1]),
            PowerSeries::from_i64s(&ring(), 64, &[3, 1]),
        ])
        .unwrap();
        let r = check_outside_p(&m, &m, Some(&[t()]), &HarnessConfig::new(6)).unwrap();
        assert_eq!(r.families[0].skipped(), vec![1]);
        assert_eq!(r.verdict, Verdict::Agree);
    }

    #[test]
    fn renderers_are_stable() {
        let r = check_outside_p(&diag(&[0, 1]), &diag(&[0, 0, 1]), Some(&[t()]), &HarnessConfig::new(3)).unwrap();
        let kv = render_kv(&r);
        assert!(kv.starts_with("theorem=outside-p\nprime=3\nn_max=3\nverdict=agree\n"));
        assert!(kv.contains("family.0.n.2=2,4,2\n"));
        assert_eq!(kv, render_kv(&r));
        assert!(render_table(&r).contains("verdict: agree"));
    }
}
