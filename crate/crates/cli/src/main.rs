//! `cubicfib`: command-line access to the analysis, local, lattice, sieve
//! and counting routines. Output is a JSON report on standard output unless
//! `--out` is given.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubic_fibration::driver::{
    analysis_report, brute_force_n, compare, fibration_count, fit_exponent, parse_form, FibrationCountConfig, Report,
    YRule, DEFAULT_SLACK,
};
use cubic_fibration::fibration::RankConfig;
use cubic_fibration::finite_field::{find_padic_nonsingular, hensel_count};
use cubic_fibration::forms::{FibrationMode, IntPolynomial, VariableSplit};
use cubic_fibration::lattice::{hyperplane_count_asymptotic, hyperplane_count_exact};
use cubic_fibration::sieve::{build_conditions, density_estimate, AdmissibleSetSpec, ConditionConfig, OmegaInfinity};
use cubic_fibration::{arith::primes_up_to, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Parser)]
#[command(name = "cubicfib", version, about = "Point counting on cubic hypersurfaces via fibrations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pi,
    PiPrime,
}

impl From<Mode> for FibrationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Pi => FibrationMode::Pi,
            Mode::PiPrime => FibrationMode::PiPrime,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// Form document (JSON).
    #[arg(long)]
    form: Option<PathBuf>,
    /// Overrides the split mode in the form document.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    #[arg(long, default_value_t = 100_000_000)]
    budget: u128,
    #[arg(long, default_value_t = 13)]
    pmax: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fibration data, shape classification and predicted exponents.
    Analyze(Common),
    /// p-adic witnesses and zero counts modulo p and p² for p ≤ pmax.
    Local(Common),
    /// Points on ⟨a, x⟩ + b = 0 in the ball of radius √(B² − 1).
    LatticeCount {
        #[command(flatten)]
        common: Common,
        /// Comma-separated primitive coefficient vector.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<i64>,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        b: i64,
        #[arg(long)]
        bound: u64,
    },
    /// Density of the admissible parameter set over the unit cube.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        ys: Vec<u64>,
    },
    /// Exact counts N(B) or fibration lower bounds.
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        bounds: Vec<u64>,
        /// Use the fibration lower bound instead of brute force.
        #[arg(long)]
        fibration: bool,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
    /// Least-squares exponent of a CSV with columns B,count.
    FitExponent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        predicted: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
    },
}

fn config(name: &str, c: &Common, extra: &[(&str, String)]) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("command".into(), name.into());
    m.insert("seed".into(), c.seed.to_string());
    m.insert("budget".into(), c.budget.to_string());
    m.insert("pmax".into(), c.pmax.to_string());
    if let Some(f) = &c.form {
        m.insert("form".into(), f.display().to_string());
    }
    for (k, v) in extra {
        m.insert((*k).into(), v.clone());
    }
    m
}

fn load(c: &Common) -> Result<(IntPolynomial, Option<VariableSplit>)> {
    let path = c.form.as_ref().ok_or_else(|| Error::Precondition("--form is required".into()))?;
    let doc = parse_form(path)?;
    let poly = doc.polynomial()?;
    let split = doc.variable_split().map(|mut s| {
        if let Some(m) = c.mode {
            s.mode = m.into();
        }
        s
    });
    Ok((poly, split))
}

fn need_split(split: Option<VariableSplit>) -> Result<VariableSplit> {
    split.ok_or_else(|| Error::InvalidSplit("the form document has no split".into()))
}

fn emit(report: &Report, out: &Option<PathBuf>) -> Result<()> {
    let text = report.to_json();
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(c) => {
            let (poly, split) = load(&c)?;
            let split = need_split(split)?;
            let rank = RankConfig { seed: c.seed, ..RankConfig::default() };
            let report = analysis_report(&poly, &split, rank, config("analyze", &c, &[]))?;
            emit(&report, &c.out)
        }
        Command::Local(c) => {
            let (poly, split) = load(&c)?;
            let allowed: Vec<usize> = match &split {
                Some(s) => s.x_indices.clone(),
                None => (0..poly.num_vars()).collect(),
            };
            let mut rows = Vec::new();
            for p in primes_up_to(c.pmax) {
                let witness = find_padic_nonsingular(&poly, &allowed, p, 2, c.budget).ok();
                let count = hensel_count(&poly, p, 2, c.budget).ok();
                rows.push(serde_json::json!({ "p": p, "witness": witness, "count": count }));
            }
            let mut report = Report::new(config("local", &c, &[]));
            report.add("local", &rows)?;
            emit(&report, &c.out)
        }
        Command::LatticeCount { common, a, b, bound } => {
            let a: Vec<BigInt> = a.iter().map(|&v| BigInt::from(v)).collect();
            let b = BigInt::from(b);
            let exact = hyperplane_count_exact(&a, &b, &BigRational::from_integer(bound.into()), None)?;
            let asym = hyperplane_count_asymptotic(&a, &b, bound as f64, 0.5, false)?;
            let extra = [("a", format!("{a:?}")), ("b", b.to_string()), ("bound", bound.to_string())];
            let mut report = Report::new(config("lattice-count", &common, &extra));
            report.add("exact", &exact)?;
            report.add("asymptotic", &asym)?;
            emit(&report, &common.out)
        }
        Command::Density { common, ys } => {
            let (poly, split) = load(&common)?;
            let split = need_split(split)?;
            let cfg = ConditionConfig { budget: common.budget, ..ConditionConfig::default() };
            let conditions = build_conditions(&poly, &split, split.mode, &cfg)?;
            let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(split.y_indices.len(), -1, 1));
            spec.conditions = Some(conditions.clone());
            let rep = density_estimate(&spec, &ys, common.budget)?;
            let mut report = Report::new(config("density", &common, &[("ys", format!("{ys:?}"))]));
            report.add("conditions", &conditions)?;
            report.add("density", &rep)?;
            report.add_table("density", rep.to_csv());
            emit(&report, &common.out)
        }
        Command::Count { common, bounds, fibration, epsilon } => {
            let (poly, split) = load(&common)?;
            let extra = [("bounds", format!("{bounds:?}")), ("fibration", fibration.to_string()), ("epsilon", epsilon.to_string())];
            let mut report = Report::new(config("count", &common, &extra));
            let series = if fibration {
                let split = need_split(split)?;
                let spec = AdmissibleSetSpec::new(OmegaInfinity::cube(split.y_indices.len(), -1, 1));
                let cfg = FibrationCountConfig { y_rule: YRule { epsilon }, budget: common.budget, ..Default::default() };
                fibration_count(&poly, &split, split.mode, &spec, &bounds, &cfg)?
            } else {
                brute_force_n(&poly, &bounds, common.budget)?
            };
            report.add("count", &series)?;
            report.add_table("count", series.to_csv());
            if let Ok(fit) = fit_exponent(&series.pairs()) {
                report.add("fit", &fit)?;
            }
            emit(&report, &common.out)
        }
        Command::FitExponent { common, input, predicted, slack } => {
            let text = std::fs::read_to_string(&input).map_err(|e| Error::Io(format!("{}: {e}", input.display())))?;
            let mut pts = Vec::new();
            for (i, line) in text.lines().enumerate().skip(1) {
                let cols: Vec<&str> = line.split(',').collect();
                let parse = |s: Option<&&str>| s.and_then(|v| v.trim().parse::<f64>().ok());
                match (parse(cols.first()), parse(cols.get(1))) {
                    (Some(b), Some(n)) => pts.push((b, n)),
                    _ if line.trim().is_empty() => {}
                    _ => return Err(Error::Parse { line: i + 1, message: "expected B,count".into() }),
                }
            }
            let fit = fit_exponent(&pts)?;
            let mut report = Report::new(config("fit-exponent", &common, &[("input", input.display().to_string())]));
            report.add("fit", &fit)?;
            if let Some(p) = predicted {
                report.add("verdict", &compare(&fit, p, slack))?;
            }
            emit(&report, &common.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
