//! Command-line front end: argument parsing, dispatch and output.

pub mod document;
pub mod selftest;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use friendsim::bell::{chsh_all, fine_joint_exists, CorrelationSet, Variable};
use friendsim::observables::DirectionAngle;
use friendsim::report::{Check, MapBuilder, ScenarioReport, Value};
use friendsim::scenarios::brukner::{brukner_extended_report, brukner_preliminary_run, BruknerVariant};
use friendsim::scenarios::epr::{epr_undo_run, EprUndoConfig, Frame, Mode, CSV_HEADER};
use friendsim::scenarios::fr::{fr_appendix_comparison, fr_audit_report, fr_outcome_table, FrObservation};
use friendsim::Error;

use document::{to_csv, to_table, ReportDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "friendsim", version, about = "Extended Wigner's-friend scenarios, simulated")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Preliminary Zeus/Xena run plus the extended two-friend CHSH scenario.
    Brukner(BruknerArgs),
    /// Coin/spin timeline with optional intervention by Zeus.
    Fr(FrArgs),
    /// Friends' measurements undone before the outer Bell test.
    EprUndo(EprArgs),
    /// Decide whether a joint distribution reproduces pairwise correlations.
    FineCheck(FineArgs),
    /// Run every acceptance check; exits 3 if any fails.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct BruknerArgs {
    /// State parameter in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value = "minus-axbz", value_parser = parse_variant)]
    pub variant: BruknerVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct FrArgs {
    #[arg(long, value_enum)]
    pub zeus: OnOff,
    /// Observed pointer values, e.g. `z=OK,w=OK`. Implies `--audit`.
    #[arg(long, value_parser = parse_observation)]
    pub observe: Option<FrObservation>,
    /// Run the step 1–4 inference audit.
    #[arg(long)]
    pub audit: bool,
    /// Add the collapse-versus-unitary comparison for the tails branch.
    #[arg(long)]
    pub appendix: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Deg,
    Rad,
}

#[derive(Debug, Args)]
pub struct EprArgs {
    /// Directions `a,b,c,d`.
    #[arg(long, default_value = "0,45,90,135", allow_hyphen_values = true, value_parser = parse_four)]
    pub angles: [f64; 4],
    #[arg(long, value_enum, default_value_t = Unit::Deg)]
    pub unit: Unit,
    #[arg(long, default_value = "unitary", value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long, default_value = "F", value_parser = parse_frame)]
    pub frame: Frame,
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also stream the per-trial CSV table to this file.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FineArgs {
    /// Correlations `ab,bc,cd,ad`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_four)]
    pub corr: [f64; 4],
    /// Optional single-variable means `a,b,c,d`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_four)]
    pub marginals: Option<[f64; 4]>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

fn parse_four(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 comma-separated numbers, got {}", parts.len()));
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(parts) {
        let v: f64 = p.parse().map_err(|_| format!("{p:?} is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
        *o = v;
    }
    Ok(out)
}

fn via_from_str<T: FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<BruknerVariant, String> {
    via_from_str(s)
}

fn parse_observation(s: &str) -> Result<FrObservation, String> {
    via_from_str(s)
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    via_from_str(s)
}

fn parse_frame(s: &str) -> Result<Frame, String> {
    via_from_str(s)
}

/// Failure of a command, mapped onto an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => EXIT_USAGE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical error: {m}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

pub fn render(report: &ScenarioReport, format: Format) -> String {
    match format {
        Format::Json => ReportDocument::from(report).to_json(),
        Format::Table => to_table(report),
        Format::Csv => to_csv(report),
    }
}

fn brukner(args: &BruknerArgs) -> Result<ScenarioReport, Failure> {
    if !args.theta.is_finite() {
        return Err(Failure::Usage(format!("theta {} is not finite", args.theta)));
    }
    let mut r = ScenarioReport::new("brukner");
    r.parameter("theta", args.theta).parameter("variant", args.variant.name());
    r.absorb("preliminary", brukner_preliminary_run()?);
    r.absorb("extended", brukner_extended_report(args.theta, args.variant)?);
    Ok(r)
}

fn fr(args: &FrArgs) -> Result<ScenarioReport, Failure> {
    let zeus = args.zeus == OnOff::On;
    let mut r = ScenarioReport::new("fr");
    r.parameter("zeus", zeus);
    r.absorb("outcomes", fr_outcome_table(zeus)?);
    if args.audit || args.observe.is_some() {
        let observed = args.observe.unwrap_or(if zeus {
            FrObservation::ok_ok()
        } else {
            FrObservation { z: None, ..FrObservation::ok_ok() }
        });
        let audit = fr_audit_report(zeus, observed)?;
        if let Some(Value::Map(m)) = audit.get_result("audit") {
            if let Some((_, c)) = m.iter().find(|(k, _)| k == "contradiction") {
                r.result("contradiction", c.clone());
            }
        }
        r.absorb("audit", audit);
    }
    if args.appendix {
        r.absorb("appendix", fr_appendix_comparison()?);
    }
    Ok(r)
}

fn epr_config(args: &EprArgs) -> Result<EprUndoConfig, Failure> {
    let mut angles = [DirectionAngle::default(); 4];
    for (a, v) in angles.iter_mut().zip(args.angles) {
        *a = match args.unit {
            Unit::Deg => DirectionAngle::from_degrees(v)?,
            Unit::Rad => DirectionAngle::from_radians(v)?,
        };
    }
    Ok(EprUndoConfig::new(angles, args.mode, args.frame, args.trials, args.seed)?)
}

fn fine_check(args: &FineArgs) -> Result<ScenarioReport, Failure> {
    let [ab, bc, cd, ad] = args.corr;
    let mut c = CorrelationSet::new(ab, bc, cd, ad)?;
    if let Some(m) = args.marginals {
        c = c.with_marginals(m)?;
    }
    let res = fine_joint_exists(&c)?;
    let mut r = ScenarioReport::new("fine-check");
    r.parameter("corr_ab_bc_cd_ad", args.corr.to_vec());
    if let Some(m) = args.marginals {
        r.parameter("marginals_abcd", m.to_vec());
    }
    let mut chsh = MapBuilder::new();
    for (v, s) in chsh_all(&c)?.values {
        chsh.push(v.name(), s);
    }
    r.result("feasible", res.feasible)
        .result("constraints", res.constraints.clone())
        .result("chsh", chsh.build())
        .result("worst_chsh", res.worst_chsh.map(|w| w.id()))
        .result("worst_chsh_value", res.worst_chsh.map(|w| w.value))
        .result("witness", res.witness.map(|w| w.to_vec()))
        .result("violated_inequality", res.violated_inequality.map(|v| v.id()))
        .result("violated_value", res.violated_inequality.map(|v| v.value));
    if let Some(f) = &res.farkas {
        r.result(
            "farkas",
            MapBuilder::new()
                .with("rows", f.rows.clone())
                .with("multipliers", f.multipliers.clone())
                .with("value", f.value)
                .build(),
        );
    }
    if let Some(w) = res.witness {
        let err = selftest::witness_error(&c, &w)?;
        let mut worst_marginal = 0.0f64;
        if c.has_marginals() {
            let back = CorrelationSet::from_distribution(&w, true)?;
            for v in Variable::ALL {
                let d = back.marginal(v).unwrap_or(f64::NAN) - c.marginal(v).unwrap_or(f64::NAN);
                worst_marginal = worst_marginal.max(d.abs());
            }
        }
        r.check(Check::at_most("witness_reproduces_correlations", 0.0, err, 1e-9))
            .check(Check::at_most("witness_reproduces_marginals", 0.0, worst_marginal, 1e-9))
            .check(Check::close("witness_total", 1.0, w.iter().sum(), 1e-9))
            .check(Check::at_least("witness_nonnegative", 0.0, w.iter().copied().fold(f64::INFINITY, f64::min), 0.0));
    }
    Ok(r)
}

fn open_out(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let report = match &cli.command {
        Command::Brukner(a) => brukner(a)?,
        Command::Fr(a) => fr(a)?,
        Command::FineCheck(a) => fine_check(a)?,
        Command::Selftest(a) => {
            let r = selftest::selftest(a.seed)?;
            let mut w = open_out(&cli.out)?;
            w.write_all(render(&r, cli.format).as_bytes())?;
            w.flush()?;
            return Ok(if r.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED });
        }
        Command::EprUndo(a) => {
            let config = epr_config(a)?;
            // CSV with trials: stdout/--out carries the per-trial table.
            let trial_table = cli.format == Format::Csv && config.trials > 0;
            let mut sinks: Vec<Box<dyn Write>> = Vec::new();
            if trial_table {
                sinks.push(open_out(&cli.out)?);
            }
            if let Some(p) = &a.records {
                sinks.push(Box::new(BufWriter::new(File::create(p)?)));
            }
            for s in &mut sinks {
                writeln!(s, "{CSV_HEADER}")?;
            }
            let mut io_err = None;
            let report = epr_undo_run(&config, |t| {
                for s in &mut sinks {
                    if let Err(e) = writeln!(s, "{t}") {
                        io_err.get_or_insert(e);
                    }
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            for s in &mut sinks {
                s.flush()?;
            }
            if trial_table {
                return Ok(EXIT_OK);
            }
            report
        }
    };
    let mut w = open_out(&cli.out)?;
    w.write_all(render(&report, cli.format).as_bytes())?;
    w.flush()?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
