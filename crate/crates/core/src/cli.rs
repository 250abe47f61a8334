//! Command-line front end. `run` returns the process exit code:
//! 0 on success, 1 on a refused or unverified certificate, 2 on bad input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::acyl::acyl_profile;
use crate::certifier::{
    analyze_pair, build_witness_chain, certify, choose_q, e_const, estimate_delta, verify_certificate, BaseConstants,
    Certificate, CertifyError, CertifyParams, Criterion, EpsilonMode,
};
use crate::error::Error;
use crate::hyperbolicity::{compute_delta, DeltaOptions, Region};
use crate::isometry::{classify, DEFAULT_POWER_CAP};
use crate::model::{build_model, ActionModel, ModelSpec};
use crate::oracle::{exceptional_sweep, write_sweep_csv};
use crate::rational::{self, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUSED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Criteria tried per sweep cell, cheapest first.
const SWEEP_ORDER: [Criterion; 5] =
    [Criterion::Nielsen, Criterion::Prop6, Criterion::Prop7, Criterion::Prop8, Criterion::Theorem9];

#[derive(Parser, Debug)]
#[command(name = "freecert", version, about = "Freeness certificates for powers of hyperbolic isometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hyperbolicity constant of a model or ball.
    Delta {
        #[command(flatten)]
        model: ModelArg,
        /// Ball radius around the origin; whole graph for finite models.
        #[arg(long)]
        radius: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Translation length and classification of one element.
    Profile {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = 3)]
        delta_radius: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Axis overlap and base points of a pair.
    Overlap {
        #[command(flatten)]
        pair: PairArg,
        #[arg(long)]
        window: Option<u64>,
        /// Use quasi-geodesic axes and `1000δ` neighbourhoods.
        #[arg(long)]
        quasi: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Brute-forced acylindricity constants.
    Acyl {
        #[command(flatten)]
        model: ModelArg,
        /// Displacement radii, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [20u64, 200])]
        radii: Vec<u64>,
        #[arg(long, default_value_t = 2)]
        region_radius: u64,
        #[arg(long, default_value_t = 4)]
        group_radius: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run one criterion and write its certificate.
    Certify {
        #[command(flatten)]
        pair: PairArg,
        #[command(flatten)]
        cert: CertArgs,
        #[arg(long)]
        no_verify: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Re-check a certificate document.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Oracle and certifier coverage over an exponent grid.
    Sweep {
        #[command(flatten)]
        pair: PairArg,
        /// Exponent range `lo:hi` for n (and m unless --m-range is given).
        #[arg(long, default_value = "1:5")]
        range: String,
        #[arg(long)]
        m_range: Option<String>,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        /// Skip the certifier column.
        #[arg(long)]
        oracle_only: bool,
        #[arg(long, value_enum, default_value_t = SweepFormat::Csv)]
        format: SweepFormat,
        #[command(flatten)]
        out: OutArg,
    },
    /// Witness chain of one word at `(a^n, b)`.
    Chain {
        #[command(flatten)]
        pair: PairArg,
        /// Word in x, y (uppercase for inverses).
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 1)]
        n: i64,
        #[arg(long)]
        e: Option<String>,
        #[arg(long)]
        q: Option<i64>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug)]
struct ModelArg {
    /// Model spec document.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args, Debug)]
struct PairArg {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    PaperLiteral,
    SharpExperimental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct CertArgs {
    #[arg(long)]
    criterion: String,
    #[arg(long, value_enum, default_value_t = ModeArg::PaperLiteral)]
    epsilon_mode: ModeArg,
    /// Rational, e.g. `150` or `301/2`.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Exact exponents `n,m`.
    #[arg(long)]
    exponents: Option<String>,
    #[arg(long, default_value_t = 6)]
    depth: u32,
    #[arg(long)]
    window: Option<u64>,
    #[arg(long, default_value_t = 3)]
    delta_radius: u64,
    /// Base constants document overriding the brute-forced ones.
    #[arg(long)]
    constants: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs one command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

fn load_model(arg: &ModelArg) -> Result<ActionModel, Error> {
    let text = fs::read_to_string(&arg.model).map_err(|e| Error::MalformedSpec(format!("{}: {e}", arg.model.display())))?;
    let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| Error::MalformedSpec(e.to_string()))?;
    build_model(&spec)
}

fn parse_rational(s: &str, what: &str) -> Result<Rational, Error> {
    rational::parse(s).ok_or_else(|| invalid(format!("{what}: not a rational: {s:?}")))
}

fn parse_range(s: &str) -> Result<(i64, i64), Error> {
    let bad = || invalid(format!("range must be lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Writes next to the target and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn emit(out: &OutArg, bytes: &[u8]) -> Result<(), Error> {
    match &out.out {
        Some(p) => write_atomic(p, bytes).map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(bytes).map_err(|e| invalid(e.to_string()))?;
            Ok(())
        }
    }
}

fn document<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s.into_bytes()
}

fn cert_params(args: &CertArgs) -> Result<CertifyParams, Error> {
    let criterion = Criterion::parse(&args.criterion).ok_or_else(|| {
        let names: Vec<&str> = Criterion::ALL.iter().map(|c| c.name()).collect();
        invalid(format!("unknown criterion {:?}; expected one of {}", args.criterion, names.join(", ")))
    })?;
    let mut p = CertifyParams::new(criterion);
    p.epsilon_mode = match args.epsilon_mode {
        ModeArg::PaperLiteral => EpsilonMode::PaperLiteral,
        ModeArg::SharpExperimental => EpsilonMode::SharpExperimental,
    };
    p.epsilon = args.epsilon.as_deref().map(|s| parse_rational(s, "epsilon")).transpose()?;
    if p.epsilon.is_some() && p.epsilon_mode == EpsilonMode::PaperLiteral {
        return Err(invalid("--epsilon requires --epsilon-mode sharp-experimental"));
    }
    if p.epsilon_mode == EpsilonMode::SharpExperimental && p.epsilon.is_none() {
        return Err(invalid("sharp-experimental mode requires --epsilon"));
    }
    p.q = args.q.as_deref().map(|s| parse_rational(s, "q")).transpose()?;
    if let Some(e) = &args.exponents {
        let bad = || invalid(format!("exponents must be n,m with n, m >= 1, got {e:?}"));
        let (n, m) = e.split_once(',').ok_or_else(bad)?;
        let (n, m): (i64, i64) = (n.trim().parse().map_err(|_| bad())?, m.trim().parse().map_err(|_| bad())?);
        if n < 1 || m < 1 {
            return Err(bad());
        }
        p.exponents = Some((n, m));
    }
    p.oracle_depth = args.depth;
    p.window = args.window;
    p.delta_radius = args.delta_radius;
    if let Some(path) = &args.constants {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let c: BaseConstants = serde_json::from_str(&text).map_err(|e| Error::MalformedSpec(e.to_string()))?;
        p.constants = Some(c);
    }
    Ok(p)
}

fn dispatch(cmd: Command) -> Result<i32, Error> {
    match cmd {
        Command::Delta { model, radius, seed, out } => {
            let m = load_model(&model)?;
            let region = match (radius, m.all_points()) {
                (Some(r), _) => Region::ball(m.origin(), r),
                (None, Some(_)) => Region::whole(&m),
                (None, None) => return Err(invalid("--radius is required for infinite models")),
            };
            let opts = DeltaOptions { seed, ..DeltaOptions::default() };
            emit(&out, &document(&compute_delta(&m, &region, &opts)?))?;
            Ok(EXIT_OK)
        }
        Command::Profile { model, a, delta_radius, out } => {
            let m = load_model(&model)?;
            let g = m.parse_word(&a)?;
            let (delta, exact) = estimate_delta(&m, delta_radius)?;
            let p = classify(&m, &g, delta, DEFAULT_POWER_CAP)?;
            emit(&out, &document(&json!({ "delta": delta, "delta_exact": exact, "profile": p })))?;
            Ok(EXIT_OK)
        }
        Command::Overlap { pair, window, quasi, out } => {
            let m = load_model(&pair.model)?;
            let (a, b) = (m.parse_word(&pair.a)?, m.parse_word(&pair.b)?);
            let mut params = CertifyParams::new(Criterion::Nielsen);
            params.window = window;
            let an = analyze_pair(&m, &a, &b, &params, quasi)?;
            let doc = json!({
                "delta": an.delta,
                "overlap_radius": an.c,
                "overlap": an.overlap,
                "base_points": an.base,
                "independence": an.independence,
                "caveats": an.caveats,
            });
            emit(&out, &document(&doc))?;
            Ok(EXIT_OK)
        }
        Command::Acyl { model, radii, region_radius, group_radius, out } => {
            let m = load_model(&model)?;
            let region = match m.all_points() {
                Some(_) => Region::whole(&m),
                None => Region::ball(m.origin(), region_radius),
            };
            emit(&out, &document(&acyl_profile(&m, &radii, &region, group_radius)?))?;
            Ok(EXIT_OK)
        }
        Command::Certify { pair, cert, no_verify, out } => {
            let m = load_model(&pair.model)?;
            let (a, b) = (m.parse_word(&pair.a)?, m.parse_word(&pair.b)?);
            let params = cert_params(&cert)?;
            let c = match certify(&m, &a, &b, &params) {
                Ok(c) => c,
                Err(CertifyError::Refused(r)) => {
                    emit(&out, &document(&json!({ "refused": r })))?;
                    return Ok(EXIT_REFUSED);
                }
                Err(CertifyError::Model(e)) => return Err(e),
            };
            emit(&out, c.to_document().as_bytes())?;
            if no_verify {
                return Ok(EXIT_OK);
            }
            let rep = verify_certificate(&c)?;
            if !rep.ok {
                eprintln!("verification failed: {}", rep.messages.join("; "));
                return Ok(EXIT_REFUSED);
            }
            Ok(EXIT_OK)
        }
        Command::Verify { certificate, out } => {
            let text =
                fs::read_to_string(&certificate).map_err(|e| invalid(format!("{}: {e}", certificate.display())))?;
            let c = Certificate::from_document(&text).map_err(|e| Error::MalformedSpec(e.to_string()))?;
            let rep = verify_certificate(&c)?;
            emit(&out, &document(&rep))?;
            Ok(if rep.ok { EXIT_OK } else { EXIT_REFUSED })
        }
        Command::Sweep { pair, range, m_range, depth, oracle_only, format, out } => {
            let m = load_model(&pair.model)?;
            let (a, b) = (m.parse_word(&pair.a)?, m.parse_word(&pair.b)?);
            let n_range = parse_range(&range)?;
            let m_range = m_range.as_deref().map(parse_range).transpose()?.unwrap_or(n_range);
            let claims = if oracle_only { Vec::new() } else { sweep_claims(&m, &a, &b)? };
            let table = exceptional_sweep(&m, &a, &b, n_range, m_range, depth, |n, k| {
                claims.iter().find(|(_, c)| c.exponents.covers(n, k)).map(|(crit, _)| crit.name().to_string())
            })?;
            let bytes = match format {
                SweepFormat::Json => document(&table),
                SweepFormat::Csv => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&table, &mut buf)?;
                    buf
                }
            };
            emit(&out, &bytes)?;
            Ok(EXIT_OK)
        }
        Command::Chain { pair, word, n, e, q, out } => {
            let m = load_model(&pair.model)?;
            let (a, b) = (m.parse_word(&pair.a)?, m.parse_word(&pair.b)?);
            let w = crate::word::Word::parse(&word, &['x', 'y']).map_err(Error::InvalidWord)?;
            if n < 1 {
                return Err(invalid("--n must be >= 1"));
            }
            let an = analyze_pair(&m, &a, &b, &CertifyParams::new(Criterion::Prop7), false)?;
            let (x, y) = an.base.clone().ok_or_else(|| invalid("both elements must be hyperbolic"))?;
            let (tf, tg) = (&an.profile_a.translation, &an.profile_b.translation);
            let e = match e {
                Some(s) => parse_rational(&s, "e")?,
                None => e_const(an.d(), &an.constants, tf),
            };
            let q = match q {
                Some(q) => q,
                None => choose_q(n as i128, tf, tg).map(|t| t.0 as i64).map_err(|_| invalid("no Q fits; pass --q"))?,
            };
            let an_pow = m.power(&an.a, n);
            let ch = build_witness_chain(&m, &w, &an_pow, &an.b, &x, &y, e, q, an.delta)?;
            emit(&out, &document(&ch))?;
            Ok(if ch.all_hold { EXIT_OK } else { EXIT_REFUSED })
        }
    }
}

/// Certificates of every applicable criterion, oracle skipped; the sweep
/// runs its own oracle per cell.
fn sweep_claims(m: &ActionModel, a: &crate::word::Word, b: &crate::word::Word) -> Result<Vec<(Criterion, Certificate)>, Error> {
    let mut out = Vec::new();
    for crit in SWEEP_ORDER {
        let mut p = CertifyParams::new(crit);
        p.oracle_depth = 0;
        match certify(m, a, b, &p) {
            Ok(c) => out.push((crit, c)),
            Err(CertifyError::Refused(_)) => {}
            Err(CertifyError::Model(e)) => return Err(e),
        }
    }
    Ok(out)
}
