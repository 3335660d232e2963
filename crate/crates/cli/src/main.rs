use std::fmt::Write as _;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;

use iwasawa_core::bertini::{
    check_fibers, enumerate_good_specializations, ramification_locus, FiberReport, MonogenicExtension,
    SpecializationFiber,
};
use iwasawa_core::charideal::{characteristic_ideal, PresentationModule};
use iwasawa_core::harness::{
    check_outside_p, check_over_p, check_with_family, render_kv, render_table, HarnessConfig, Verdict,
};
use iwasawa_core::lambda::{weierstrass_prepare, PowerSeries};
use iwasawa_core::padic::PAdicRing;
use iwasawa_core::parse::{parse_extension, parse_family, parse_matrix, parse_poly, FamilyLiteral};
use iwasawa_core::specialize::{FamilyKind, SpecializationFamily, UnitRule};
use iwasawa_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "iwasawa",
    version,
    about = "Exact arithmetic for torsion modules over Z_p[[T]]"
)]
struct Cli {
    #[arg(long, global = true, default_value_t = 3)]
    prime: u32,
    /// p-adic precision N.
    #[arg(long = "p-prec", global = true, default_value_t = 40)]
    p_prec: u32,
    /// T-adic precision D.
    #[arg(long = "t-prec", global = true, default_value_t = 64)]
    t_prec: usize,
    #[arg(long = "n-max", global = true, default_value_t = 20)]
    n_max: u32,
    /// Seed for the unit sequence a_n; without it a_n = 1.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Kv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weierstrass preparation of a series literal.
    Wprep {
        series: String,
        /// Number of unit coefficients to print.
        #[arg(long, default_value_t = 8)]
        terms: usize,
    },
    /// Characteristic ideal of a square matrix literal.
    Char { matrix: String },
    /// Compare two modules along specialization families.
    Check {
        #[arg(value_enum)]
        kind: Kind,
        m: String,
        n: String,
        /// Base z; outside p it names the target prime.
        #[arg(long)]
        z: Option<String>,
        /// Family literal `kind,z,r,aRule,nMax`.
        #[arg(long)]
        family: Option<String>,
    },
    /// Ramification locus and fibers of a monic extension in S.
    Bertini {
        h: String,
        /// Family literal `kind,z,r,aRule,nMax`.
        #[arg(long)]
        family: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    #[value(name = "outside-p")]
    OutsideP,
    #[value(name = "over-p")]
    OverP,
}

struct RunConfig {
    ring: Arc<PAdicRing>,
    t_precision: usize,
    n_max: u32,
    units: UnitRule,
    format: Format,
}

impl RunConfig {
    fn new(cli: &Cli) -> Result<Self, Error> {
        if cli.prime == 2 {
            return Err(Error::InvalidConfig("p must be odd".into()));
        }
        if cli.p_prec < 10 {
            return Err(Error::InvalidConfig(format!(
                "p-adic precision {} is below 10",
                cli.p_prec
            )));
        }
        Ok(RunConfig {
            ring: PAdicRing::new(cli.prime, cli.p_prec)?,
            t_precision: cli.t_prec,
            n_max: cli.n_max,
            units: cli.seed.map_or(UnitRule::Const(1), UnitRule::Seeded),
            format: cli.format,
        })
    }

    fn check_degree(&self, degree: usize) -> Result<(), Error> {
        if self.t_precision < 2 * degree {
            return Err(Error::InvalidConfig(format!(
                "T-precision {} is below twice the input degree {degree}",
                self.t_precision
            )));
        }
        Ok(())
    }

    fn series(&self, coeffs: &[BigInt]) -> Result<PowerSeries, Error> {
        self.check_degree(coeffs.len().saturating_sub(1))?;
        Ok(PowerSeries::from_bigints(&self.ring, self.t_precision, coeffs))
    }

    fn matrix(&self, src: &str) -> Result<PresentationModule, Error> {
        let rows = parse_matrix(src)?
            .iter()
            .map(|row| row.iter().map(|c| self.series(c)).collect())
            .collect::<Result<Vec<_>, _>>()?;
        PresentationModule::new(rows)
    }

    fn family(&self, lit: &FamilyLiteral) -> Result<SpecializationFamily, Error> {
        let z = self.series(&lit.z)?;
        match lit.kind {
            FamilyKind::OutsideP => SpecializationFamily::outside_p(z, lit.units),
            FamilyKind::OverP => SpecializationFamily::over_p(z, self.series(&lit.r)?, lit.units),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 2,
        Error::NotTorsionAtPrecision => 3,
        Error::InseparableAtPrecision => 6,
        _ => 1,
    }
}

fn kv_line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn cmd_wprep(cfg: &RunConfig, src: &str, terms: usize) -> Result<(String, u8), Error> {
    let f = cfg.series(&parse_poly(src)?)?;
    let w = weierstrass_prepare(&f)?;
    let unit: Vec<BigInt> = w.unit.balanced_coeffs().into_iter().take(terms).collect();
    let mut unit_str = iwasawa_core::lambda::format_poly(&unit, "T");
    if w.unit.degree().is_some_and(|d| d >= terms) {
        unit_str.push_str(" + O(T^");
        let _ = write!(unit_str, "{terms})");
    }
    let mut out = String::new();
    match cfg.format {
        Format::Kv => {
            kv_line(&mut out, "mu", w.mu);
            kv_line(&mut out, "lambda", w.lambda());
            kv_line(&mut out, "distinguished", &w.distinguished);
            kv_line(&mut out, "unit", unit_str);
            kv_line(&mut out, "p_precision", w.p_precision);
            kv_line(&mut out, "t_precision", w.t_precision);
        }
        Format::Table => {
            let _ = writeln!(out, "mu             {}", w.mu);
            let _ = writeln!(out, "lambda         {}", w.lambda());
            let _ = writeln!(out, "distinguished  {}", w.distinguished);
            let _ = writeln!(out, "unit           {unit_str}");
            let _ = writeln!(out, "precision      O(p^{}), O(T^{})", w.p_precision, w.t_precision);
        }
    }
    Ok((out, 0))
}

fn cmd_char(cfg: &RunConfig, src: &str) -> Result<(String, u8), Error> {
    let m = cfg.matrix(src)?;
    let c = characteristic_ideal(&m, &[])?;
    let mut out = String::new();
    match cfg.format {
        Format::Kv => {
            kv_line(&mut out, "mu", c.mu);
            kv_line(&mut out, "lambda", c.lambda());
            for (i, f) in c.factors.iter().enumerate() {
                kv_line(&mut out, &format!("factor.{i}"), &f.poly);
                kv_line(&mut out, &format!("factor.{i}.multiplicity"), f.multiplicity);
                kv_line(&mut out, &format!("factor.{i}.irreducibility"), f.irreducibility);
            }
            if let Some(r) = &c.residual {
                kv_line(&mut out, "residual", r);
            }
        }
        Format::Table => {
            let _ = writeln!(out, "module  {m}");
            let _ = writeln!(out, "{c}");
            if let Some(r) = &c.residual {
                let _ = writeln!(out, "unfactored residual  {r}");
            }
        }
    }
    Ok((out, 0))
}

fn cmd_check(
    cfg: &RunConfig,
    kind: Kind,
    m_src: &str,
    n_src: &str,
    z_src: Option<&str>,
    family_src: Option<&str>,
) -> Result<(String, u8), Error> {
    let m = cfg.matrix(m_src)?;
    let n = cfg.matrix(n_src)?;
    let mut config = HarnessConfig::new(cfg.n_max);
    config.units = vec![cfg.units];
    let report = if let Some(src) = family_src {
        let lit = parse_family(src)?;
        let expected = match kind {
            Kind::OutsideP => FamilyKind::OutsideP,
            Kind::OverP => FamilyKind::OverP,
        };
        if lit.kind != expected {
            return Err(Error::InvalidConfig(format!(
                "family kind {} does not match the theorem",
                lit.kind
            )));
        }
        config.n_max = lit.n_max;
        check_with_family(&m, &n, &cfg.family(&lit)?, &config)?
    } else {
        let z = z_src.map(|s| parse_poly(s).and_then(|c| cfg.series(&c))).transpose()?;
        match kind {
            Kind::OutsideP => {
                let targets = z
                    .map(|z| weierstrass_prepare(&z).map(|w| vec![w.distinguished]))
                    .transpose()?;
                check_outside_p(&m, &n, targets.as_deref(), &config)?
            }
            Kind::OverP => {
                let z = z.unwrap_or_else(|| PowerSeries::t(&cfg.ring, cfg.t_precision));
                check_over_p(&m, &n, &z, &config)?
            }
        }
    };
    let out = match cfg.format {
        Format::Kv => render_kv(&report),
        Format::Table => render_table(&report),
    };
    let code = match report.verdict {
        Verdict::Agree => 0,
        Verdict::DivergenceDetected => 4,
        Verdict::Inconclusive => 5,
    };
    Ok((out, code))
}

fn fiber_fields(r: &FiberReport) -> [String; 3] {
    [
        r.status.label().to_string(),
        r.evidence.clone(),
        r.witness.clone().unwrap_or_else(|| "-".into()),
    ]
}

fn cmd_bertini(cfg: &RunConfig, h_src: &str, family_src: Option<&str>) -> Result<(String, u8), Error> {
    let h = parse_extension(h_src)?;
    let coeffs = (0..=h.s_degree().unwrap_or(0))
        .map(|s| cfg.series(h.s_coeff(s)))
        .collect::<Result<Vec<_>, _>>()?;
    let ext = MonogenicExtension::new(coeffs)?;
    let lit = match family_src {
        Some(src) => parse_family(src)?,
        None => FamilyLiteral {
            kind: FamilyKind::OutsideP,
            z: vec![BigInt::from(0), BigInt::from(1)],
            r: vec![BigInt::from(0)],
            units: cfg.units,
            n_max: cfg.n_max,
        },
    };
    let fam = cfg.family(&lit)?;
    let locus = ramification_locus(&ext)?;
    let p = cfg.ring.prime();
    let candidates = check_fibers(
        &ext,
        locus
            .primes
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, q)| (i as u32, Ok(q)))
            .collect(),
    )?;
    let fibers = enumerate_good_specializations(&ext, &fam, lit.n_max)?;
    let mut out = String::new();
    match cfg.format {
        Format::Kv => {
            kv_line(&mut out, "extension", &ext);
            kv_line(&mut out, "resultant", &locus.resultant);
            kv_line(&mut out, "normality", "assumed");
            for (i, (q, (_, fiber))) in locus.primes.iter().zip(&candidates).enumerate() {
                kv_line(&mut out, &format!("candidate.{i}"), q.label(p));
                if let SpecializationFiber::Checked(r) = fiber {
                    let [status, evidence, witness] = fiber_fields(r);
                    kv_line(&mut out, &format!("candidate.{i}.status"), status);
                    kv_line(&mut out, &format!("candidate.{i}.evidence"), evidence);
                    kv_line(&mut out, &format!("candidate.{i}.witness"), witness);
                }
            }
            kv_line(&mut out, "family", format!("{},{},{}", lit.kind, fam.z, lit.units));
            for (n, fiber) in &fibers {
                match fiber {
                    SpecializationFiber::Checked(r) => {
                        let [status, evidence, witness] = fiber_fields(r);
                        kv_line(&mut out, &format!("n.{n}.prime"), r.prime.label(p));
                        kv_line(&mut out, &format!("n.{n}.status"), status);
                        kv_line(&mut out, &format!("n.{n}.evidence"), evidence);
                        kv_line(&mut out, &format!("n.{n}.witness"), witness);
                    }
                    SpecializationFiber::Skipped(reason) => {
                        kv_line(&mut out, &format!("n.{n}.skipped"), reason);
                    }
                }
            }
        }
        Format::Table => {
            let _ = writeln!(out, "extension  {ext}");
            let _ = writeln!(out, "resultant  {}", locus.resultant);
            let labels: Vec<String> = locus.primes.iter().map(|q| q.label(p)).collect();
            let _ = writeln!(out, "S-candidates  [{}]", labels.join(", "));
            let _ = writeln!(out, "normality  assumed");
            for (q, (_, fiber)) in labels.iter().zip(&candidates) {
                if let SpecializationFiber::Checked(r) = fiber {
                    let [status, evidence, witness] = fiber_fields(r);
                    let _ = writeln!(out, "  {q}  {status}  {evidence}  witness={witness}");
                }
            }
            let _ = writeln!(out, "family  {} z={} a={}", lit.kind, fam.z, lit.units);
            let _ = writeln!(out, "{:>3}  {:<24}  {:<14}  evidence", "n", "prime", "status");
            for (n, fiber) in &fibers {
                match fiber {
                    SpecializationFiber::Checked(r) => {
                        let [status, evidence, _] = fiber_fields(r);
                        let _ = writeln!(out, "{n:>3}  {:<24}  {status:<14}  {evidence}", r.prime.label(p));
                    }
                    SpecializationFiber::Skipped(reason) => {
                        let _ = writeln!(out, "{n:>3}  skipped: {reason}");
                    }
                }
            }
        }
    }
    Ok((out, 0))
}

fn run(cli: &Cli) -> Result<(String, u8), Error> {
    let cfg = RunConfig::new(cli)?;
    match &cli.command {
        Command::Wprep { series, terms } => cmd_wprep(&cfg, series, *terms),
        Command::Char { matrix } => cmd_char(&cfg, matrix),
        Command::Check { kind, m, n, z, family } => cmd_check(&cfg, *kind, m, n, z.as_deref(), family.as_deref()),
        Command::Bertini { h, family } => cmd_bertini(&cfg, h, family.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
