//! Command-line front end. Every command reads JSON files, calls into
//! `locc_forge`, and writes exactly one JSON document to standard output.
//!
//! Exit codes: 0 on success or a true verdict, 1 on a false verdict or a
//! refusal, 2 on any input or usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use locc_forge::certify::{Certificate, Certifier, CertifyHints, CertifyOutcome};
use locc_forge::construct::BuildPlan;
use locc_forge::measure::{self, NonorthogonalPair, SurvivalConfig};
use locc_forge::protocol::{self, ProtocolNode};
use locc_forge::states::DEFAULT_TOL;
use locc_forge::{analysis, fixtures, wire, Error, Measurement, StateSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "locc-forge",
    version,
    about = "Orthogonal product-state sets and their local distinguishability"
)]
pub struct Cli {
    /// Verdict tolerance for orthogonality, phase classes, perfection and audits.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tolerance: f64,
    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit a built-in state set or protocol.
    Fixtures(FixturesArgs),
    /// Per-party dimension of the orthogonality-preserving POVM space.
    Analyze(AnalyzeArgs),
    /// Issue a certificate or a refusal.
    Certify(CertifyArgs),
    /// Check a certificate against a state set.
    Verify(VerifyArgs),
    /// Execute a build plan.
    Construct(ConstructArgs),
    /// Run a protocol tree on every state of a set.
    Simulate(SimulateArgs),
    /// Surviving-outcome checks, random or for a given measurement and pair.
    Lemma1(Lemma1Args),
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// State-set fixture name.
    #[arg(long, required_unless_present = "protocol", conflicts_with = "protocol")]
    pub name: Option<String>,
    /// Protocol fixture name (`example2`).
    #[arg(long)]
    pub protocol: Option<String>,
    /// Custom alpha for `example1`, as a JSON vector of `[re, im]` pairs.
    #[arg(long, requires = "beta")]
    pub alpha: Option<String>,
    /// Custom beta for `example1`.
    #[arg(long, requires = "alpha")]
    pub beta: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Certification hints (`split`, `superset_of`).
    #[arg(long)]
    pub hints: Option<PathBuf>,
    /// Where to write the certificate when one is issued.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub cert: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Where to write the built state set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the certification hints.
    #[arg(long)]
    pub hints_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub protocol: PathBuf,
}

#[derive(Debug, Args)]
pub struct Lemma1Args {
    /// Measurement JSON file; switches to a single check with `--alpha`/`--beta`.
    #[arg(long, requires_all = ["alpha", "beta"])]
    pub measurement: Option<PathBuf>,
    #[arg(long, requires = "measurement")]
    pub alpha: Option<String>,
    #[arg(long, requires = "measurement")]
    pub beta: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, env = "LOCC_FORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub min_dim: usize,
    #[arg(long, default_value_t = 5)]
    pub max_dim: usize,
    #[arg(long, default_value_t = 1)]
    pub min_outcomes: usize,
    #[arg(long, default_value_t = 6)]
    pub max_outcomes: usize,
    #[arg(long, default_value_t = 0.05)]
    pub min_overlap: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

impl Failure {
    fn to_json(&self) -> Value {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m.clone()),
            Failure::Io(path, e) => ("io", format!("{}: {e}", path.display())),
            Failure::Core(Error::Json(e)) => ("parse", e.to_string()),
            Failure::Core(e) => ("input", e.to_string()),
        };
        json!({ "error": { "kind": kind, "message": message } })
    }
}

struct Report {
    body: Value,
    code: i32,
}

impl Report {
    fn ok(body: impl Serialize) -> Result<Self, Failure> {
        Self::verdict(body, true)
    }

    fn verdict(body: impl Serialize, holds: bool) -> Result<Self, Failure> {
        Ok(Self {
            body: serde_json::to_value(body)?,
            code: if holds { EXIT_OK } else { EXIT_FALSE },
        })
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn read_set(path: &Path) -> Result<StateSet, Failure> {
    Ok(StateSet::from_json(&read(path)?)?)
}

fn parse_vector(text: &str) -> Result<locc_forge::CVector, Failure> {
    let w: wire::WireVector = serde_json::from_str(text)?;
    Ok(wire::vector_from_wire(&w))
}

fn fixtures_cmd(args: &FixturesArgs) -> Result<Report, Failure> {
    if let Some(name) = &args.protocol {
        return match name.as_str() {
            "example2" => Report::ok(protocol::example2_protocol()),
            other => Err(Failure::Core(Error::UnknownFixture(other.to_string()))),
        };
    }
    let name = args.name.as_deref().unwrap_or_default();
    let set = match (&args.alpha, &args.beta) {
        (Some(a), Some(b)) if name == "example1" => fixtures::example1(&parse_vector(a)?, &parse_vector(b)?)?,
        (Some(_), _) | (_, Some(_)) => {
            return Err(Failure::Usage("--alpha/--beta apply only to example1".into()));
        }
        _ => fixtures::builtin_fixture(name)?,
    };
    Report::ok(set)
}

fn analyze_cmd(args: &AnalyzeArgs, tol: f64) -> Result<Report, Failure> {
    let set = read_set(&args.input)?;
    let parties: Vec<Value> = analysis::analyze_all_with_tol(&set, tol)?
        .into_iter()
        .map(|a| json!({ "party": a.party, "dimension": a.dimension, "trivial_only": a.trivial_only }))
        .collect();
    Report::ok(parties)
}

fn certify_cmd(args: &CertifyArgs, tol: f64) -> Result<Report, Failure> {
    let set = read_set(&args.input)?;
    let hints: Option<CertifyHints> = match &args.hints {
        Some(path) => Some(serde_json::from_str(&read(path)?)?),
        None => None,
    };
    let outcome = Certifier::new(tol).certify(&set, hints.as_ref())?;
    if let (Some(path), CertifyOutcome::Certificate(cert)) = (&args.out, &outcome) {
        write(path, &cert.to_json()?)?;
    }
    let issued = outcome.certificate().is_some();
    Report::verdict(outcome, issued)
}

fn verify_cmd(args: &VerifyArgs, tol: f64) -> Result<Report, Failure> {
    let set = read_set(&args.set)?;
    let cert = Certificate::from_json(&read(&args.cert)?)?;
    match Certifier::new(tol).verify(&cert, &set) {
        Ok(valid) => Report::verdict(json!({ "valid": valid }), valid),
        Err(e @ Error::HashMismatch { .. }) => {
            Report::verdict(json!({ "valid": false, "reason": e.to_string() }), false)
        }
        Err(e) => Err(e.into()),
    }
}

fn construct_cmd(args: &ConstructArgs) -> Result<Report, Failure> {
    let plan: BuildPlan = serde_json::from_str(&read(&args.plan)?)?;
    let built = plan.execute()?;
    if let Some(path) = &args.out {
        write(path, &built.set.to_json()?)?;
    }
    if let Some(path) = &args.hints_out {
        write(path, &serde_json::to_string(&built.hints)?)?;
    }
    Report::ok(json!({ "set": built.set, "hints": built.hints }))
}

fn simulate_cmd(args: &SimulateArgs, tol: f64) -> Result<Report, Failure> {
    let set = read_set(&args.set)?;
    let root = ProtocolNode::from_json(&read(&args.protocol)?)?;
    let distribution = protocol::simulate(&set, &root)?;
    let perfection = protocol::is_perfect(&distribution, tol);
    let audit = protocol::orthogonality_audit(&set, &root, tol)?;
    let perfect = perfection.perfect;
    Report::verdict(
        json!({ "distribution": distribution, "perfection": perfection, "audit": audit }),
        perfect,
    )
}

fn lemma1_cmd(args: &Lemma1Args, tol: f64) -> Result<Report, Failure> {
    if let (Some(path), Some(a), Some(b)) = (&args.measurement, &args.alpha, &args.beta) {
        let m: Measurement = serde_json::from_str(&read(path)?)?;
        let pair = NonorthogonalPair::new(&parse_vector(a)?, &parse_vector(b)?)?;
        let check = measure::survival_check(0, &m, &pair, tol)?;
        let outcomes = measure::diagnose_outcomes(&m, &pair)?;
        let holds = check.surviving_outcome.is_some() && check.bookkeeping_holds;
        return Report::verdict(json!({ "check": check, "outcomes": outcomes }), holds);
    }
    let config = SurvivalConfig {
        trials: args.trials,
        seed: args.seed,
        min_dim: args.min_dim,
        max_dim: args.max_dim,
        min_outcomes: args.min_outcomes,
        max_outcomes: args.max_outcomes,
        min_overlap: args.min_overlap,
    };
    let summary = measure::survival_suite(&config, tol)?;
    let passed = summary.all_passed();
    Report::verdict(summary, passed)
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    let tol = cli.tolerance;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Failure::Usage(format!(
            "tolerance must be finite and nonnegative, got {tol}"
        )));
    }
    match &cli.command {
        Command::Fixtures(a) => fixtures_cmd(a),
        Command::Analyze(a) => analyze_cmd(a, tol),
        Command::Certify(a) => certify_cmd(a, tol),
        Command::Verify(a) => verify_cmd(a, tol),
        Command::Construct(a) => construct_cmd(a),
        Command::Simulate(a) => simulate_cmd(a, tol),
        Command::Lemma1(a) => lemma1_cmd(a, tol),
    }
}

fn emit(out: &mut impl Write, body: &Value, pretty: bool) {
    let text = if pretty {
        serde_json::to_string_pretty(body)
    } else {
        serde_json::to_string(body)
    }
    .expect("serializing a json value");
    // a closed stdout leaves nothing to report to
    let _ = writeln!(out, "{text}");
}

/// Parses `argv` (including the program name), runs the command, writes its
/// JSON report to `out`, and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let pretty = argv.iter().any(|a| a == "--pretty");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let body = Failure::Usage(e.to_string().trim_end().to_string()).to_json();
            emit(out, &body, pretty);
            return EXIT_INPUT;
        }
    };
    match dispatch(&cli) {
        Ok(report) => {
            emit(out, &report.body, cli.pretty);
            report.code
        }
        Err(failure) => {
            emit(out, &failure.to_json(), cli.pretty);
            EXIT_INPUT
        }
    }
}
