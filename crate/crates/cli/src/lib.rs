//! Command-line front end: `check`, `eval` and `fixtures`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mtlmon::fixtures::{self, ExpectedViolation, Fault};
use mtlmon::monitor::{run_all, run_stream, RunError, RunOptions, RunReport, Verdict};
use mtlmon::oracle::{self, OracleError};
use mtlmon::spec::{parse_spec, RequirementSet, SpecError};
use mtlmon::trace::{
    write_events, write_trace, TimedState, TimedStateSequence, TraceError, TraceFormat, TraceReader,
};

/// Events cross-checked against the oracle by `--oracle-check`.
pub const ORACLE_PREFIX: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "mtlmon",
    version,
    about = "Checks timed traces against metric temporal logic requirements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monitor every requirement of a spec over a trace.
    Check(CliConfig),
    /// Evaluate one requirement at one position of a trace with the reference semantics.
    Eval(EvalArgs),
    /// Write the bundled autoclave spec, traces and expected verdicts.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TraceFormat::Csv,
            FormatArg::Jsonl => TraceFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    /// Specification file.
    #[arg(long, value_name = "PATH")]
    pub spec: PathBuf,
    /// Trace file, or `-` for standard input.
    #[arg(long, value_name = "PATH")]
    pub trace: PathBuf,
    /// Trace format; guessed from the file extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

impl TraceArgs {
    fn trace_format(&self) -> TraceFormat {
        self.format
            .map(TraceFormat::from)
            .unwrap_or_else(|| TraceFormat::from_path(&self.trace))
    }

    fn is_stdin(&self) -> bool {
        self.trace.as_os_str() == "-"
    }
}

#[derive(Debug, Clone, Args)]
pub struct CliConfig {
    #[command(flatten)]
    pub input: TraceArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub report: ReportFormat,
    /// Exit with status 1 when any requirement is violated.
    #[arg(long)]
    pub fail_on_violation: bool,
    /// Cross-check verdicts with the reference semantics on the first events.
    #[arg(long)]
    pub oracle_check: bool,
    /// Largest residual formula, in nodes, a monitor may hold.
    #[arg(long, value_name = "N", default_value_t = mtlmon::monitor::DEFAULT_RESIDUAL_CEILING as u64,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub residual_ceiling: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: TraceArgs,
    /// Requirement name.
    #[arg(long)]
    pub requirement: String,
    /// 1-based trace position.
    #[arg(long)]
    pub index: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FixturesArgs {
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Also write `throughput.csv` with this many events of normal operation.
    #[arg(long, value_name = "N")]
    pub throughput_events: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Io {
        path: PathBuf,
        source: io::Error,
    },
    Spec {
        path: PathBuf,
        text: String,
        error: SpecError,
    },
    Trace {
        path: PathBuf,
        format: TraceFormat,
        error: TraceError,
    },
    Run {
        path: PathBuf,
        format: TraceFormat,
        error: RunError,
    },
    Oracle(OracleError),
    UnknownRequirement {
        name: String,
        available: Vec<String>,
    },
    OracleMismatch {
        events: usize,
        mismatches: Vec<(String, Verdict, bool)>,
    },
}

impl CliError {
    /// Human-readable diagnostic, with the offending source line when known.
    pub fn render(&self) -> String {
        match self {
            CliError::Io { path, source } => format!("{}: {source}", path.display()),
            CliError::Spec { path, text, error } => {
                let mut out = format!(
                    "{}:{}:{}: {}",
                    path.display(),
                    error.line,
                    error.column,
                    error.kind
                );
                if let Some(line) = text.lines().nth(error.line.saturating_sub(1)) {
                    let width = error.line.to_string().len();
                    let _ = write!(
                        out,
                        "\n{:width$} |\n{} | {line}\n{:width$} | {:>col$}",
                        "",
                        error.line,
                        "",
                        "^",
                        col = error.column.max(1),
                    );
                }
                out
            }
            CliError::Trace {
                path,
                format,
                error,
            } => render_trace_error(path, *format, error),
            CliError::Run {
                path,
                format,
                error,
            } => match error {
                RunError::Trace(e) => render_trace_error(path, *format, e),
                RunError::Monitor { event: Some(k), .. } if *format == TraceFormat::Csv => {
                    format!("{}:{}: {error}", path.display(), file_line(*format, *k))
                }
                RunError::Monitor { .. } => format!("{}: {error}", path.display()),
            },
            CliError::Oracle(e) => e.to_string(),
            CliError::UnknownRequirement { name, available } => format!(
                "unknown requirement `{name}`; available: {}",
                available.join(", ")
            ),
            CliError::OracleMismatch { events, mismatches } => {
                let mut out = format!("monitor and oracle disagree on the first {events} events:");
                for (name, verdict, holds) in mismatches {
                    let _ = write!(out, "\n  {name}: monitor {verdict}, oracle {holds}");
                }
                out
            }
        }
    }
}

/// Data row `row` of a trace sits on this line of the file.
fn file_line(format: TraceFormat, row: usize) -> usize {
    match format {
        TraceFormat::Csv => row + 1,
        TraceFormat::Jsonl => row.max(1),
    }
}

fn render_trace_error(path: &Path, format: TraceFormat, error: &TraceError) -> String {
    let row = match error {
        TraceError::NonMonotonic { row, .. }
        | TraceError::Schema { row, .. }
        | TraceError::Parse { row, .. } => Some(*row),
        TraceError::Header(_) => Some(0),
        _ => None,
    };
    let Some(row) = row else {
        return format!("{}: {error}", path.display());
    };
    let line = file_line(format, row);
    let mut out = format!("{}:{line}: {error}", path.display());
    let context = (path.as_os_str() != "-")
        .then(|| fs::read_to_string(path).ok())
        .flatten()
        .and_then(|text| text.lines().nth(line - 1).map(str::to_string));
    if let Some(text) = context {
        let width = line.to_string().len();
        let _ = write!(out, "\n{:width$} |\n{line} | {text}", "");
    }
    out
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(config) => cmd_check(&config, stdin, out, err),
        Command::Eval(args) => cmd_eval(&args, stdin, out).map(|_| 0),
        Command::Fixtures(args) => cmd_fixtures(&args, out).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.render());
            2
        }
    }
}

pub fn load_spec(path: &Path) -> Result<RequirementSet, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec(&text).map_err(|error| CliError::Spec {
        path: path.to_path_buf(),
        text,
        error,
    })
}

fn open_trace<'a>(
    input: &TraceArgs,
    stdin: &'a mut dyn Read,
) -> Result<Box<dyn Read + 'a>, CliError> {
    if input.is_stdin() {
        return Ok(Box::new(stdin));
    }
    File::open(&input.trace)
        .map(|f| Box::new(f) as Box<dyn Read>)
        .map_err(|source| CliError::Io {
            path: input.trace.clone(),
            source,
        })
}

fn trace_error(input: &TraceArgs, error: TraceError) -> CliError {
    match error {
        TraceError::Io(source) => CliError::Io {
            path: input.trace.clone(),
            source,
        },
        error => CliError::Trace {
            path: input.trace.clone(),
            format: input.trace_format(),
            error,
        },
    }
}

fn run_error(input: &TraceArgs, error: RunError) -> CliError {
    match error {
        RunError::Trace(e) => trace_error(input, e),
        error => CliError::Run {
            path: input.trace.clone(),
            format: input.trace_format(),
            error,
        },
    }
}

/// Runs `check`. Returns 1 when violations are found under
/// `--fail-on-violation`, 0 otherwise.
pub fn cmd_check(
    config: &CliConfig,
    stdin: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let set = load_spec(&config.input.spec)?;
    let format = config.input.trace_format();
    let reader = TraceReader::new(open_trace(&config.input, stdin)?, format)
        .map_err(|e| trace_error(&config.input, e))?;
    let options = RunOptions {
        residual_ceiling: Some(config.residual_ceiling as usize),
        ..RunOptions::default()
    };
    let keep = if config.oracle_check {
        ORACLE_PREFIX
    } else {
        0
    };
    let mut prefix = Vec::with_capacity(keep);
    let events = reader.inspect(|e| {
        if let Ok(e) = e {
            if prefix.len() < keep {
                prefix.push(e.clone());
            }
        }
    });
    let report = run_stream(&set, events, options).map_err(|e| run_error(&config.input, e))?;
    if config.oracle_check {
        let agreed = oracle_check(&set, prefix, options, &config.input)?;
        let _ = writeln!(
            err,
            "oracle check: {} requirements agree with the reference semantics on the first {agreed} events",
            set.len()
        );
    }
    let written = match config.report {
        ReportFormat::Text => out.write_all(text_report(&report).as_bytes()),
        ReportFormat::Json => serde_json::to_writer_pretty(&mut *out, &report)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(out)),
    };
    written.map_err(|source| CliError::Io {
        path: PathBuf::from("-"),
        source,
    })?;
    let violated = report.summary.violated > 0;
    Ok(if violated && config.fail_on_violation {
        1
    } else {
        0
    })
}

/// Monitors the prefix again and compares each final verdict with the
/// oracle at position 1. Returns the prefix length.
fn oracle_check(
    set: &RequirementSet,
    prefix: Vec<TimedState>,
    options: RunOptions,
    input: &TraceArgs,
) -> Result<usize, CliError> {
    let trace = TimedStateSequence::new(prefix).map_err(|e| trace_error(input, e))?;
    let report = run_all(set, &trace, options).map_err(|e| run_error(input, e))?;
    let mut mismatches = Vec::new();
    for (requirement, outcome) in set.requirements.iter().zip(&report.requirements) {
        let holds = oracle::evaluate(&trace, 1, &requirement.formula, &requirement.bindings)
            .map_err(CliError::Oracle)?;
        if holds != (outcome.verdict == Verdict::NotViolated) {
            mismatches.push((requirement.name.clone(), outcome.verdict, holds));
        }
    }
    if mismatches.is_empty() {
        Ok(trace.len())
    } else {
        Err(CliError::OracleMismatch {
            events: trace.len(),
            mismatches,
        })
    }
}

pub fn text_report(report: &RunReport) -> String {
    let name_width = report
        .requirements
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(0)
        .max("requirement".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:name_width$}  {:13}  {:12}  {:>14}  events",
        "requirement", "class", "verdict", "violation_time"
    );
    for r in &report.requirements {
        let time = r
            .violation_time
            .map_or_else(|| "-".to_string(), |t| t.to_string());
        let _ = writeln!(
            out,
            "{:name_width$}  {:13}  {:12}  {:>14}  {}",
            r.name,
            r.class.as_str(),
            r.verdict.as_str(),
            time,
            r.events
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "violations: {} of {} requirements",
        report.summary.violated, report.summary.total
    );
    let _ = writeln!(
        out,
        "events: {} in {:.3} s ({:.0} events/s)",
        report.events,
        report.elapsed.as_secs_f64(),
        report.summary.events_per_second
    );
    let _ = writeln!(out, "peak residual: {} nodes", report.peak_residual());
    out
}

/// Prints the reference truth value of one requirement at one position.
pub fn cmd_eval(
    args: &EvalArgs,
    stdin: &mut dyn Read,
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let set = load_spec(&args.input.spec)?;
    let requirement = set
        .get(&args.requirement)
        .ok_or_else(|| CliError::UnknownRequirement {
            name: args.requirement.clone(),
            available: set.names().into_iter().map(str::to_string).collect(),
        })?;
    let format = args.input.trace_format();
    let trace = mtlmon::trace::parse_trace(open_trace(&args.input, stdin)?, format)
        .map_err(|e| trace_error(&args.input, e))?;
    let holds = oracle::evaluate_expr(&trace, args.index, &requirement.expr, &requirement.bindings)
        .map_err(CliError::Oracle)?;
    writeln!(out, "{holds}").map_err(|source| CliError::Io {
        path: PathBuf::from("-"),
        source,
    })?;
    Ok(holds)
}

#[derive(Debug, Serialize)]
struct ExpectedTrace {
    trace: String,
    description: &'static str,
    violations: Vec<ExpectedViolation>,
}

/// Writes the fixture set and returns the paths written.
pub fn cmd_fixtures(args: &FixturesArgs, out: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let dir = &args.out;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let spec = dir.join("autoclave.spec");
    fs::write(&spec, fixtures::SPEC).map_err(io_err(&spec))?;
    written.push(spec);

    let save = |name: &str, trace: &TimedStateSequence| -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(io_err(&path))?;
        write_trace(io::BufWriter::new(file), trace, TraceFormat::Csv).map_err(|e| match e {
            TraceError::Io(source) => CliError::Io {
                path: path.clone(),
                source,
            },
            other => CliError::Io {
                path: path.clone(),
                source: io::Error::other(other.to_string()),
            },
        })?;
        Ok(path)
    };

    let mut expected = vec![ExpectedTrace {
        trace: "clean.csv".into(),
        description: "normal operation",
        violations: Vec::new(),
    }];
    written.push(save("clean.csv", &fixtures::clean_trace())?);
    for fault in Fault::ALL {
        let name = format!("{}.csv", fault.name());
        written.push(save(&name, &fixtures::fault_trace(fault))?);
        expected.push(ExpectedTrace {
            trace: name,
            description: fault.description(),
            violations: fault.expected(),
        });
    }

    let path = dir.join("expected.json");
    let json = serde_json::to_string_pretty(&expected).expect("expected verdicts serialize");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    written.push(path);

    if let Some(n) = args.throughput_events {
        let path = dir.join("throughput.csv");
        let file = File::create(&path).map_err(io_err(&path))?;
        let events: Vec<_> = fixtures::throughput_events(n).collect();
        write_events(
            io::BufWriter::new(file),
            &fixtures::schema(),
            &events,
            TraceFormat::Csv,
        )
        .map_err(|e| CliError::Io {
            path: path.clone(),
            source: io::Error::other(e.to_string()),
        })?;
        written.push(path);
    }

    for path in &written {
        writeln!(out, "{}", path.display()).map_err(io_err(Path::new("-")))?;
    }
    Ok(written)
}
