use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use quadapprox::construct::{self, Certificate, ConstructOptions, Construction, Mode};
use quadapprox::numtheory;
use quadapprox::pell::{self, UnitNorm};
use quadapprox::spectrum::{self, SpectrumConfig, CSV_HEADER};
use quadapprox::{Error, Execution, FieldDesc, Precision, QuadElem};

#[derive(Parser)]
#[command(name = "quadapprox", version, about = "Evenly divisible approximations to real quadratic irrationalities")]
struct Cli {
    /// Starting precision in bits for interval decisions
    #[arg(long, global = true, env = "QUADAPPROX_PRECISION_BITS", default_value_t = 128)]
    precision_bits: u64,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fundamental solution of x^2 - D y^2 = +-1
    Pell {
        #[arg(long = "D")]
        d: u64,
        #[arg(long, value_enum, default_value = "1")]
        norm: NormArg,
    },
    /// Greedy prime blocks L, L' and the CRT choice of M
    SelectPrimes {
        #[arg(long)]
        eps: String,
    },
    /// Symmetric or twisted construction
    Construct {
        #[command(flatten)]
        elem: ElemArgs,
        #[arg(long)]
        eps: String,
        #[arg(long, value_enum, default_value = "symmetric")]
        mode: ModeArg,
        /// Print parameter margins and factor magnitudes to stderr
        #[arg(long)]
        explain: bool,
        #[arg(long, value_enum, default_value = "1")]
        norm: NormArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strongly divisible sequence for alpha in the square class
    Strong {
        #[command(flatten)]
        elem: ElemArgs,
        #[arg(long)]
        n_from: u64,
        #[arg(long)]
        n_to: u64,
        #[arg(long, value_enum, default_value = "1")]
        norm: NormArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a certificate file (one certificate or an array)
    Verify {
        #[arg(long)]
        cert: PathBuf,
        /// Also require the certificate to concern this alpha
        #[arg(long, requires = "d")]
        alpha: Option<String>,
        #[arg(long = "D")]
        d: Option<u64>,
    },
    /// Minimal gaps of the spectrum {alpha m^2 + n^2}
    Spectrum {
        #[command(flatten)]
        elem: ElemArgs,
        #[arg(long)]
        levels: u64,
        /// Comma-separated level counts; defaults to --levels
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Worker threads; 1 selects the sequential merge
        #[arg(long)]
        workers: Option<usize>,
        /// Also report lambda_N pi / (4 sqrt(alpha) N)
        #[arg(long)]
        weyl: bool,
    },
    /// Write A * alpha = beta^2 with beta integral
    Decompose {
        #[command(flatten)]
        elem: ElemArgs,
    },
}

#[derive(Args)]
struct ElemArgs {
    /// Element of Q(sqrt(D)), e.g. "3+2*sqrt(2)" or "(1+sqrt(5))/2"
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long = "D")]
    d: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    #[value(name = "1")]
    Plus,
    #[value(name = "-1")]
    Minus,
}

impl From<NormArg> for UnitNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Plus => UnitNorm::Plus,
            NormArg::Minus => UnitNorm::Minus,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Symmetric,
    TwistedP,
    TwistedQ,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Symmetric => Mode::Symmetric,
            ModeArg::TwistedP => Mode::TwistedP,
            ModeArg::TwistedQ => Mode::TwistedQ,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Verify(String),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidDiscriminant(..)
            | Error::FieldMismatch(..)
            | Error::Precondition(_)
            | Error::NoNegativePell(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = Result<(), Failure>;

fn field(d: u64) -> Result<FieldDesc, Failure> {
    Ok(FieldDesc::new(d)?)
}

fn elem(args: &ElemArgs) -> Result<QuadElem, Failure> {
    Ok(QuadElem::parse(&field(args.d)?, &args.alpha)?)
}

/// `p/q`, an integer, or a decimal such as `0.15`.
fn parse_eps(s: &str) -> Result<BigRational, Failure> {
    let bad = || Failure::Usage(format!("cannot parse eps {s:?}"));
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(digits, den));
    }
    s.parse::<BigRational>().map_err(|_| bad())
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn check_built(cs: &[Construction]) -> CmdResult {
    let failed: Vec<String> = cs
        .iter()
        .flat_map(|c| {
            c.report
                .failures()
                .into_iter()
                .map(move |f| format!("n = {}: {}: {}", c.certificate.params.n, f.name, f.detail))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(failed.join("\n")))
    }
}

fn policy(cli: &Cli) -> Result<Precision, Failure> {
    if cli.precision_bits < 64 {
        return Err(Failure::Usage(format!(
            "precision must be at least 64 bits, got {}",
            cli.precision_bits
        )));
    }
    Ok(Precision::with_start(cli.precision_bits))
}

fn run(cli: &Cli) -> CmdResult {
    let prec = policy(cli)?;
    match &cli.cmd {
        Cmd::Pell { d, norm } => {
            let k = field(*d)?;
            let s = pell::fundamental_unit_solution(&k, (*norm).into())?;
            let cf = pell::cf_sqrt(&k);
            emit(
                &json!({
                    "x": s.x.to_string(),
                    "y": s.y.to_string(),
                    "D": s.d.to_string(),
                    "norm": s.norm,
                    "period_length": cf.period.len(),
                }),
                None,
            )?;
        }
        Cmd::SelectPrimes { eps } => {
            let eps = parse_eps(eps)?;
            let pair = numtheory::select_blocks(&eps)?;
            let (m, m1, m2) = numtheory::crt_smallest_m(&pair.l.product, &pair.lp.product)?;
            emit(
                &json!({
                    "blocks": pair,
                    "M": m.to_string(),
                    "m1": m1.to_string(),
                    "m2": m2.to_string(),
                    "exceeds_budget": pair.exceeds_budget(numtheory::DEFAULT_BLOCK_BUDGET),
                }),
                None,
            )?;
        }
        Cmd::Construct {
            elem: e,
            eps,
            mode,
            explain,
            norm,
            out,
        } => {
            let alpha = elem(e)?;
            let eps = parse_eps(eps)?;
            let opts = ConstructOptions {
                norm: (*norm).into(),
                precision: prec,
                explain: *explain,
                ..ConstructOptions::default()
            };
            let c = construct::construct(&alpha, &eps, (*mode).into(), &opts)?;
            if let Some(x) = &c.explain {
                eprintln!("{}", serde_json::to_string_pretty(x).map_err(anyhow::Error::from)?);
            }
            emit(&c.certificate, out.as_ref())?;
            check_built(std::slice::from_ref(&c))?;
        }
        Cmd::Strong {
            elem: e,
            n_from,
            n_to,
            norm,
            out,
        } => {
            let alpha = elem(e)?;
            let opts = ConstructOptions {
                norm: (*norm).into(),
                precision: prec,
                ..ConstructOptions::default()
            };
            let cs = construct::strong_sequence(&alpha, *n_from, *n_to, &opts)?;
            let certs: Vec<&Certificate> = cs.iter().map(|c| &c.certificate).collect();
            emit(&certs, out.as_ref())?;
            check_built(&cs)?;
        }
        Cmd::Verify { cert, alpha, d } => {
            let text = fs::read_to_string(cert).with_context(|| format!("reading {}", cert.display()))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::Verify(format!("invalid JSON: {e}")))?;
            let items = match value {
                serde_json::Value::Array(v) => v,
                v => vec![v],
            };
            let expected = match (alpha, d) {
                (Some(a), Some(d)) => Some(QuadElem::parse(&field(*d)?, a)?),
                _ => None,
            };
            let mut reports = Vec::new();
            let mut failures = Vec::new();
            for (i, item) in items.into_iter().enumerate() {
                let c: Certificate = match serde_json::from_value(item) {
                    Ok(c) => c,
                    Err(e) => {
                        failures.push(format!("certificate {i}: malformed: {e}"));
                        continue;
                    }
                };
                if let Some(a) = &expected {
                    let same = QuadElem::parse(a.field(), &c.alpha).map(|x| &x == a).unwrap_or(false);
                    if !same || c.d != *a.d() {
                        failures.push(format!("certificate {i}: concerns {} in Q(sqrt({})), not {a}", c.alpha, c.d));
                    }
                }
                match construct::verify_certificate(&c, &prec) {
                    Ok(r) => {
                        for f in r.failures() {
                            failures.push(format!("certificate {i}: {}: {}", f.name, f.detail));
                        }
                        reports.push(r);
                    }
                    Err(e) => failures.push(format!("certificate {i}: {e}")),
                }
            }
            emit(&json!({ "passed": failures.is_empty(), "reports": reports, "failures": failures }), None)?;
            if !failures.is_empty() {
                return Err(Failure::Verify(failures.join("\n")));
            }
        }
        Cmd::Spectrum {
            elem: e,
            levels,
            checkpoints,
            format,
            workers,
            weyl,
        } => {
            let alpha = elem(e)?;
            let mut cps = if checkpoints.is_empty() { vec![*levels] } else { checkpoints.clone() };
            cps.retain(|&n| n <= *levels);
            if cps.is_empty() {
                return Err(Failure::Usage("all checkpoints exceed --levels".into()));
            }
            let execution = match workers {
                Some(1) => Execution::Sequential,
                _ => Execution::Parallel,
            };
            let cfg = SpectrumConfig {
                precision_bits: cli.precision_bits.max(64),
                execution,
                ..SpectrumConfig::default()
            };
            let profile = spectrum::min_gap_profile(&alpha, &cps, &cfg)?;
            let weyl = if *weyl {
                Some(spectrum::weyl_check(&alpha, *levels, &cfg)?)
            } else {
                None
            };
            match format {
                Format::Csv => {
                    let mut stdout = io::stdout().lock();
                    let mut write = || -> io::Result<()> {
                        writeln!(stdout, "{CSV_HEADER}")?;
                        for entry in &profile.entries {
                            writeln!(stdout, "{}", entry.csv_row())?;
                        }
                        Ok(())
                    };
                    write().map_err(anyhow::Error::from)?;
                    if let Some(w) = weyl {
                        eprintln!("weyl ratio at N = {}: {:.6}", w.n, w.ratio);
                    }
                }
                Format::Json => {
                    let rows: Vec<_> = profile
                        .entries
                        .iter()
                        .map(|p| p.to_json(profile.precision_bits))
                        .collect();
                    emit(
                        &json!({
                            "alpha": alpha.to_string(),
                            "D": alpha.d().to_string(),
                            "precision_bits": profile.precision_bits,
                            "profile": rows,
                            "weyl": weyl,
                        }),
                        None,
                    )?;
                }
            }
        }
        Cmd::Decompose { elem: e } => {
            let alpha = elem(e)?;
            let in_class = construct::square_class_test(&alpha);
            if !in_class {
                emit(&json!({ "alpha": alpha.to_string(), "square_class": false }), None)?;
                return Err(Failure::Usage(format!("{alpha} is not in the square class")));
            }
            let (a, beta) = construct::square_decompose(&alpha)?;
            emit(
                &json!({
                    "alpha": alpha.to_string(),
                    "square_class": true,
                    "A": a.to_string(),
                    "beta": beta.to_string(),
                }),
                None,
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Cmd::Spectrum {
        workers: Some(w), ..
    } = &cli.cmd
    {
        if *w > 1 {
            std::env::set_var("RAYON_NUM_THREADS", w.to_string());
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed:\n{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
