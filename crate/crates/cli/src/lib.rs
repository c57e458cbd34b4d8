//! Command-line front end: argument parsing, file I/O and output formatting
//! around `povm-core`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use povm_core::aspect::{
    bivariate_marginals, joint_probabilities, standard_composite, AnalyzerAngles, AspectConfig,
    ChshReport,
};
use povm_core::fine::{
    check_no_signaling_with_tol, joint_exists_with_tol, JointDecision, MarginalSet,
    NoSignalingReport, PAIRS,
};
use povm_core::measure::MeasureJson;
use povm_core::nonideality::{martens_for_bivariate, MartensReport};
use povm_core::operator::MatrixJson;
use povm_core::srt::{figure4_sweep, srt_bivariate, srt_povm, uniform_grid, SrtConfig};
use povm_core::{Execution, Operator, ProbabilityTable, State, DEFAULT_TOL};
use serde::{Deserialize, Serialize};

mod selfcheck;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_MEASURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SIGNALING: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_SOFTWARE: i32 = 70;
pub const EXIT_IO: i32 = 74;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] povm_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid(_) => EXIT_DATA,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(povm_core::Error::Internal(_)) => EXIT_SOFTWARE,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "povm", version, about = "Generalized measurements, nonideal joint measurement and the generalized Aspect experiment")]
struct Cli {
    /// Numerical tolerance for validation.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for sweeps and batches (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stern-Gerlach/Ramsey-type neutron interference with a partial absorber.
    Srt(SrtArgs),
    /// Generalized Aspect experiment with partially transparent mirrors.
    Aspect(AspectArgs),
    /// Entropic complementarity check for a bivariate measure.
    Martens(MartensArgs),
    /// Joint-distribution existence for four bivariate marginals.
    Fine(FineArgs),
    /// Measure file utilities.
    Measure {
        #[command(subcommand)]
        action: MeasureCommand,
    },
    /// Seeded randomized consistency checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SrtEmit {
    Povm,
    Bivariate,
    Probabilities,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct SrtArgs {
    #[command(subcommand)]
    command: Option<SrtCommand>,
    /// Absorber transmissivity a in [0, 1].
    #[arg(long)]
    absorber: Option<f64>,
    /// Interference phase chi.
    #[arg(long, default_value_t = 0.0)]
    phase: f64,
    #[arg(long, value_enum, default_value = "povm")]
    emit: SrtEmit,
    /// Density matrix file, required for `--emit probabilities`.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum SrtCommand {
    /// Entropy trade-off curve over a uniform absorber grid.
    Sweep {
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AspectEmit {
    Joint,
    Marginals,
    Chsh,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct AspectArgs {
    #[command(subcommand)]
    command: Option<AspectCommand>,
    /// Mirror transmissivity of the first arm.
    #[arg(long)]
    gamma1: Option<f64>,
    /// Mirror transmissivity of the second arm.
    #[arg(long)]
    gamma2: Option<f64>,
    /// Polarizer angles theta1,theta1',theta2,theta2' in radians.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
    /// `bell` for the singlet, or a density matrix file.
    #[arg(long, default_value = "bell")]
    state: String,
    #[arg(long, value_enum, default_value = "chsh")]
    emit: AspectEmit,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum AspectCommand {
    /// Recombine the four standard limiting experiments.
    StandardComposite {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        angles: Option<Vec<f64>>,
        #[arg(long, default_value = "bell")]
        state: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Debug, Args)]
struct MartensArgs {
    /// Bivariate measure file.
    #[arg(long)]
    bivariate: PathBuf,
    /// Maximal PVM smeared by the first marginal.
    #[arg(long)]
    pvm1: PathBuf,
    /// Maximal PVM smeared by the second marginal.
    #[arg(long)]
    pvm2: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct FineArgs {
    /// File with the four tables keyed "AB", "AB'", "A'B", "A'B'".
    #[arg(long)]
    marginals: PathBuf,
}

#[derive(Debug, Subcommand)]
enum MeasureCommand {
    /// Check a measure file for positivity and completeness.
    Validate { file: PathBuf },
}

#[derive(Debug, Args)]
pub(crate) struct SelfcheckArgs {
    /// Random samples per check.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

/// Data written by a subcommand and the exit code to return afterwards.
struct Output {
    body: String,
    code: i32,
}

impl Output {
    fn ok(body: String) -> Self {
        Self { body, code: EXIT_OK }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Data goes to standard output or `--out`, diagnostics to
/// standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_DATA,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = validate_globals(&cli).and_then(|()| in_pool(cli.jobs, || dispatch(&cli)));
    match result.and_then(|output| emit(&cli.out, out, &output).map(|()| output.code)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn validate_globals(cli: &Cli) -> CliResult<()> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(CliError::Invalid(format!("--tol must be positive, got {}", cli.tol)));
    }
    if cli.jobs == Some(0) {
        return Err(CliError::Invalid("--jobs must be at least 1".into()));
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> CliResult<R> + Send) -> CliResult<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn in_pool<R>(_jobs: Option<usize>, f: impl FnOnce() -> CliResult<R>) -> CliResult<R> {
    f()
}

fn emit(path: &Option<PathBuf>, stdout: &mut dyn Write, output: &Output) -> CliResult<()> {
    match path {
        Some(path) => fs::write(path, &output.body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => stdout
            .write_all(output.body.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn dispatch(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Srt(args) => srt(args, cli.tol),
        Command::Aspect(args) => aspect(args, cli.tol),
        Command::Martens(args) => martens(args, cli.tol),
        Command::Fine(args) => fine(args, cli.tol),
        Command::Measure {
            action: MeasureCommand::Validate { file },
        } => validate_measure(file, cli.tol),
        Command::Selfcheck(args) => selfcheck::run(args, cli.seed, cli.tol),
    }
}

/// 17 significant digits with a '.' decimal point; parses back to the same
/// `f64`.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Invalid(format!("serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn read_state(path: &Path, tol: f64) -> CliResult<State> {
    let matrix: MatrixJson = read_json(path)?;
    Ok(State::with_tol(Operator::try_from(&matrix)?, tol)?)
}

fn state_arg(spec: &str, tol: f64) -> CliResult<State> {
    match spec {
        "bell" => Ok(State::singlet()),
        path => read_state(Path::new(path), tol),
    }
}

fn unit_interval(name: &str, value: f64) -> CliResult<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::Invalid(format!("{name} must lie in [0, 1], got {value}")))
    }
}

fn finite(name: &str, value: f64) -> CliResult<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Invalid(format!("{name} must be finite")))
    }
}

fn angles_arg(angles: &Option<Vec<f64>>) -> CliResult<AnalyzerAngles> {
    match angles.as_deref() {
        Some(&[t1, t1p, t2, t2p]) => {
            for t in [t1, t1p, t2, t2p] {
                finite("angle", t)?;
            }
            Ok(AnalyzerAngles::new(t1, t1p, t2, t2p))
        }
        Some(other) => Err(CliError::Invalid(format!(
            "--angles takes four comma-separated values, got {}",
            other.len()
        ))),
        None => Err(CliError::Invalid("--angles is required".into())),
    }
}

fn srt(args: &SrtArgs, tol: f64) -> CliResult<Output> {
    if let Some(SrtCommand::Sweep {
        points,
        phase,
        format,
    }) = &args.command
    {
        return srt_sweep(*points, *phase, *format);
    }
    let absorber = args
        .absorber
        .ok_or_else(|| CliError::Invalid("--absorber is required".into()))?;
    let config = SrtConfig::new(unit_interval("absorber", absorber)?, finite("phase", args.phase)?)?;
    let state = match (&args.state, args.emit) {
        (Some(path), _) => Some(read_state(path, tol)?),
        (None, SrtEmit::Probabilities) => {
            return Err(CliError::Invalid("--emit probabilities needs --state".into()))
        }
        (None, _) => None,
    };
    let body = match (args.emit, args.format) {
        (SrtEmit::Povm, Format::Json) => json(&MeasureJson::from(&srt_povm(&config)?))?,
        (SrtEmit::Bivariate, Format::Json) => json(&MeasureJson::from(&srt_bivariate(&config)?))?,
        (SrtEmit::Povm | SrtEmit::Bivariate, Format::Csv) => {
            return Err(CliError::Invalid("measures are emitted as json only".into()))
        }
        (SrtEmit::Probabilities, format) => {
            let state = state.expect("checked above");
            let bivariate = srt_bivariate(&config)?;
            let table = bivariate.born_probabilities_with_tol(&state, tol)?;
            match format {
                Format::Json => json(&table)?,
                Format::Csv => labeled_csv("outcome,p", bivariate.labels(), &table),
            }
        }
    };
    Ok(Output::ok(body))
}

fn labeled_csv(header: &str, labels: &[String], table: &ProbabilityTable) -> String {
    let mut text = format!("{header}\n");
    for (label, p) in labels.iter().zip(table.values()) {
        text.push_str(&format!("\"{label}\",{}\n", csv_float(*p)));
    }
    text
}

fn srt_sweep(points: usize, phase: f64, format: Format) -> CliResult<Output> {
    if points < 2 {
        return Err(CliError::Invalid(format!("--points must be at least 2, got {points}")));
    }
    let rows = figure4_sweep(&uniform_grid(points), finite("phase", phase)?, Execution::default())?;
    let body = match format {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let mut text = String::from("a,J_lambda,J_mu,bound,slack\n");
            for r in &rows {
                let cells = [r.a, r.j_lambda, r.j_mu, r.bound, r.slack].map(csv_float);
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            text
        }
    };
    Ok(Output::ok(body))
}

const OUTCOMES: [&str; 2] = ["+", "-"];

fn chsh_csv(chsh: &ChshReport) -> String {
    let mut text = String::from("quantity,value\n");
    for (pair, e) in PAIRS.iter().zip(chsh.correlators) {
        text.push_str(&format!("\"E({pair})\",{}\n", csv_float(e)));
    }
    for (k, s) in chsh.values.iter().enumerate() {
        text.push_str(&format!("S{k},{}\n", csv_float(*s)));
    }
    text.push_str(&format!("max_abs_S,{}\n", csv_float(chsh.max_abs())));
    text
}

fn marginals_csv(m: &MarginalSet) -> String {
    let mut text = String::from("pair,first,second,p\n");
    for (pair, t) in PAIRS.iter().zip(m.tables()) {
        for (flat, p) in t.values().iter().enumerate() {
            let [i, j] = [flat / 2, flat % 2];
            text.push_str(&format!("\"{pair}\",{},{},{}\n", OUTCOMES[i], OUTCOMES[j], csv_float(*p)));
        }
    }
    text
}

fn aspect(args: &AspectArgs, tol: f64) -> CliResult<Output> {
    if let Some(AspectCommand::StandardComposite {
        angles,
        state,
        format,
    }) = &args.command
    {
        return composite(angles, state, *format, tol);
    }
    let gamma = |name: &str, v: Option<f64>| -> CliResult<f64> {
        unit_interval(name, v.ok_or_else(|| CliError::Invalid(format!("--{name} is required")))?)
    };
    let config = AspectConfig::new(
        gamma("gamma1", args.gamma1)?,
        gamma("gamma2", args.gamma2)?,
        angles_arg(&args.angles)?,
        state_arg(&args.state, tol)?,
    )?;
    let joint = joint_probabilities(&config)?;
    let body = match (args.emit, args.format) {
        (AspectEmit::Joint, Format::Json) => json(&joint)?,
        (AspectEmit::Joint, Format::Csv) => {
            let mut text = String::from("m1,n1,m2,n2,p\n");
            for (flat, p) in joint.values().iter().enumerate() {
                let index = joint.unflatten(flat).iter().map(|&i| OUTCOMES[i]).collect::<Vec<_>>();
                text.push_str(&format!("{},{}\n", index.join(","), csv_float(*p)));
            }
            text
        }
        (AspectEmit::Marginals, format) => {
            let m = bivariate_marginals(&joint)?;
            match format {
                Format::Json => json(&m)?,
                Format::Csv => marginals_csv(&m),
            }
        }
        (AspectEmit::Chsh, format) => {
            let chsh = bivariate_marginals(&joint)?.chsh()?;
            match format {
                Format::Json => json(&chsh)?,
                Format::Csv => chsh_csv(&chsh),
            }
        }
    };
    Ok(Output::ok(body))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompositeReport {
    pub marginals: MarginalSet,
    pub chsh: ChshReport,
    pub max_abs_s: f64,
}

fn composite(angles: &Option<Vec<f64>>, state: &str, format: Format, tol: f64) -> CliResult<Output> {
    let result = standard_composite(angles_arg(angles)?, &state_arg(state, tol)?)?;
    let body = match format {
        Format::Json => json(&CompositeReport {
            max_abs_s: result.chsh.max_abs(),
            marginals: result.marginals,
            chsh: result.chsh,
        })?,
        Format::Csv => chsh_csv(&result.chsh),
    };
    Ok(Output::ok(body))
}

fn martens(args: &MartensArgs, tol: f64) -> CliResult<Output> {
    let bivariate = read_json::<MeasureJson>(&args.bivariate)?.to_povm(tol)?;
    let pvm1 = read_json::<MeasureJson>(&args.pvm1)?.to_pvm(tol)?;
    let pvm2 = read_json::<MeasureJson>(&args.pvm2)?.to_pvm(tol)?;
    let report: MartensReport = martens_for_bivariate(&bivariate, &pvm1, &pvm2)?;
    let body = match args.format {
        Format::Json => json(&report)?,
        Format::Csv => format!(
            "J_lambda,J_mu,bound,slack\n{}\n",
            [report.j_lambda, report.j_mu, report.bound, report.slack]
                .map(csv_float)
                .join(",")
        ),
    };
    Ok(Output::ok(body))
}

#[derive(Debug, Serialize)]
pub struct FineReport {
    pub no_signaling: NoSignalingReport,
    #[serde(flatten)]
    pub decision: Option<JointDecision>,
}

fn fine(args: &FineArgs, tol: f64) -> CliResult<Output> {
    let marginals: MarginalSet = read_json(&args.marginals)?;
    let no_signaling = check_no_signaling_with_tol(&marginals, tol);
    if !no_signaling.pass {
        return Ok(Output {
            body: json(&FineReport {
                no_signaling,
                decision: None,
            })?,
            code: EXIT_SIGNALING,
        });
    }
    let decision = joint_exists_with_tol(&marginals, tol)?;
    let code = if decision.is_feasible() {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    };
    Ok(Output {
        body: json(&FineReport {
            no_signaling,
            decision: Some(decision),
        })?,
        code,
    })
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub file: String,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complete: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

fn validate_measure(file: &Path, tol: f64) -> CliResult<Output> {
    let parsed = read_json::<MeasureJson>(file).and_then(|m| Ok(m.to_povm(tol)?));
    let mut report = ValidationReport {
        file: file.display().to_string(),
        valid: false,
        dim: None,
        outcomes: None,
        complete: None,
        violation: None,
    };
    let code = match parsed {
        Ok(povm) => {
            report.valid = true;
            report.dim = Some(povm.dim());
            report.outcomes = Some(povm.len());
            report.complete = Some(povm.is_complete_with_tol(tol));
            EXIT_OK
        }
        Err(e @ CliError::Io { .. }) => return Err(e),
        Err(e) => {
            report.violation = Some(e.to_string());
            EXIT_INVALID_MEASURE
        }
    };
    Ok(Output {
        body: json(&report)?,
        code,
    })
}
