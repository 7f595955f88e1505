//! Command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use incflow::{Backend, StepRule};
use serde::Serialize;
use thiserror::Error;

use crate::check::check_run;
use crate::gen;
use crate::runner::{run_stream_with, MetricsRecord, RunOptions, RunReport};
use crate::stream::{parse_stream, ParseError, UpdateStream};
use crate::trace::TraceSink;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Solver(#[from] incflow::Error),
    #[error("verification failed:\n{0}")]
    Verify(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) | AppError::Io { .. } | AppError::Parse { .. } => 1,
            AppError::Solver(_) | AppError::Verify(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "incflow", version, about = "Incremental thresholded p-norm flow, maxflow and effective resistance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a p-norm stream.
    Pnorm(RunArgs),
    /// Run a maxflow stream.
    Maxflow(RunArgs),
    /// Run an effective-resistance stream.
    Effres(RunArgs),
    /// Run a stream and compare every event against the static oracles (small instances).
    Verify(RunArgs),
    /// Write a seeded stream to standard output or a file.
    Gen(GenArgs),
    /// Run streams one after another and print per-stream totals.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Trees,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Trees => Backend::Trees,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    LineSearch,
    Fixed,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "exact")]
    pub backend: BackendArg,
    /// Min-ratio cycle approximation factor (must be 1 with the exact backend).
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail on the first broken potential, contraction or window bound.
    #[arg(long)]
    pub assert_invariants: bool,
    #[arg(long, value_enum, default_value = "line-search")]
    pub step_rule: StepArg,
}

impl SolverArgs {
    pub fn options(&self) -> Result<RunOptions, AppError> {
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(AppError::Usage(format!("--kappa must be a finite value >= 1, got {}", self.kappa)));
        }
        if self.backend == BackendArg::Exact && self.kappa != 1.0 {
            return Err(AppError::Usage("--kappa other than 1 needs --backend trees".into()));
        }
        Ok(RunOptions {
            backend: self.backend.into(),
            kappa: self.kappa,
            seed: self.seed,
            assert_invariants: self.assert_invariants,
            step_rule: match self.step_rule {
                StepArg::LineSearch => StepRule::LineSearch,
                StepArg::Fixed => StepRule::Fixed,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub stream: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Internal per-iteration trace (JSON lines); kept apart from the metrics.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    /// Include the published flow in each record.
    #[arg(long)]
    pub flows: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Random,
    PlantedThreshold,
    PhaseStress,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Pnorm,
    Maxflow,
    Effres,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    /// Problem for `random` (planted-threshold is p-norm, phase-stress is maxflow).
    #[arg(long, value_enum, default_value = "pnorm")]
    pub problem: ProblemArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    /// Vertices (planted-threshold).
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Edges: total for planted-threshold, upper bound for random p-norm and
    /// effres, insertions for random maxflow, paths for phase-stress.
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    /// Where the threshold sits between the final and initial optimum.
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// Largest capacity for random maxflow.
    #[arg(long, default_value_t = 8)]
    pub max_cap: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(required = true)]
    pub streams: Vec<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
struct BenchRecord<'a> {
    stream: &'a str,
    problem: &'static str,
    backend: &'static str,
    events: usize,
    mrc_queries: u64,
    mwu_iterations: u64,
    refinement_steps: u64,
    wall_ms: f64,
    us_per_query: Option<f64>,
}

fn read_stream(path: &Path) -> Result<UpdateStream, AppError> {
    let text = fs::read_to_string(path).map_err(|source| AppError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_stream(&text).map_err(|source| AppError::Parse {
        path: path.to_owned(),
        source,
    })
}

fn out_err(source: io::Error) -> AppError {
    AppError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn run_command(args: &RunArgs, expect: Option<&str>, out: &mut dyn Write) -> Result<RunReport, AppError> {
    let stream = read_stream(&args.stream)?;
    let name = stream.header.problem.name();
    if let Some(want) = expect {
        if want != name {
            return Err(AppError::Usage(format!("`{want}` given a {name} stream")));
        }
    }
    let opts = args.solver.options()?;
    let trace = match &args.trace {
        Some(p) => Some(TraceSink::create(p).map_err(|source| AppError::Io {
            path: p.clone(),
            source,
        })?),
        None => None,
    };
    let mut io_error = None;
    let report = run_stream_with(&stream, &opts, trace, |rec| {
        let m = MetricsRecord::new(rec, args.flows);
        let line = if args.json { m.to_json() } else { m.to_text() };
        if io_error.is_none() {
            if let Err(e) = writeln!(out, "{line}") {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(out_err(e));
    }
    Ok(report)
}

fn verify(args: &RunArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let stream = read_stream(&args.stream)?;
    let report = run_command(args, None, &mut io::sink())?;
    let check = check_run(&stream, &report)?;
    for ev in &check.events {
        let line = if args.json {
            serde_json::to_string(ev).expect("plain data")
        } else {
            let oracle = ev.oracle.map_or("inf".to_string(), |x| x.to_string());
            format!("event={} verdict={} oracle={} agree={}", ev.event, ev.verdict, oracle, ev.ok)
        };
        writeln!(out, "{line}").map_err(out_err)?;
    }
    if check.passed() {
        Ok(())
    } else {
        Err(AppError::Verify(check.failures().join("\n")))
    }
}

fn generate(args: &GenArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let stream = match (args.kind, args.problem) {
        (GenKind::Random, ProblemArg::Pnorm) => gen::random_pnorm(args.seed, args.p, args.m)?,
        (GenKind::Random, ProblemArg::Maxflow) => {
            incflow::drivers::MaxflowParams::new(args.eps, 1)?;
            gen::random_maxflow(args.seed, args.eps, args.m, args.max_cap.max(1))
        }
        (GenKind::Random, ProblemArg::Effres) => gen::random_effres(args.seed, args.eps, args.m)?,
        (GenKind::PlantedThreshold, _) => gen::planted_pnorm(args.seed, args.n, args.m, args.p, args.rho)?,
        (GenKind::PhaseStress, _) => {
            incflow::drivers::MaxflowParams::new(args.eps, 1)?;
            gen::phase_stress(args.seed, args.m, args.eps)
        }
    };
    let text = stream.to_string();
    match &args.output {
        Some(path) => fs::write(path, text).map_err(|source| AppError::Io {
            path: path.clone(),
            source,
        }),
        None => out.write_all(text.as_bytes()).map_err(out_err),
    }
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let opts = args.solver.options()?;
    // one core: streams run one after another
    for path in &args.streams {
        let stream = read_stream(path)?;
        let report = run_stream_with(&stream, &opts, None, |_| {})?;
        let last = report.events.last().expect("at least the start event");
        let wall_ms = report.wall.as_secs_f64() * 1e3;
        let label = path.display().to_string();
        let rec = BenchRecord {
            stream: &label,
            problem: stream.header.problem.name(),
            backend: match opts.backend {
                Backend::Exact => "exact",
                Backend::Trees => "trees",
            },
            events: report.events.len(),
            mrc_queries: last.mrc_queries,
            mwu_iterations: last.mwu_iterations,
            refinement_steps: last.refinement_steps,
            wall_ms,
            us_per_query: (last.mrc_queries > 0).then(|| wall_ms * 1e3 / last.mrc_queries as f64),
        };
        let line = if args.json {
            serde_json::to_string(&rec).expect("plain data")
        } else {
            format!(
                "stream={} problem={} backend={} events={} mrc_queries={} mwu_iterations={} refinement_steps={} wall_ms={:.3}",
                rec.stream, rec.problem, rec.backend, rec.events, rec.mrc_queries, rec.mwu_iterations, rec.refinement_steps, rec.wall_ms
            )
        };
        writeln!(out, "{line}").map_err(out_err)?;
    }
    Ok(())
}

/// Executes a parsed command line, writing records to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), AppError> {
    match &cli.command {
        Command::Pnorm(a) => run_command(a, Some("pnorm"), out).map(drop),
        Command::Maxflow(a) => run_command(a, Some("maxflow"), out).map(drop),
        Command::Effres(a) => run_command(a, Some("effres"), out).map(drop),
        Command::Verify(a) => verify(a, out),
        Command::Gen(a) => generate(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

/// Parses `args`, runs, and reports errors on standard error.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
