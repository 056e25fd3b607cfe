//! Batch workflow around the feedback engine: ingest a manifest of
//! submissions, cluster them, let an instructor pick references, verify every
//! member against its reference and summarize the results.

pub mod ingest;
pub mod report;
pub mod review;
pub mod state;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

use dpfeedback::constraints::InputConstraints;
use dpfeedback::feedback::VerifyConfig;
use dpfeedback::solver::SolverConfig;

use state::{write_atomic, CorpusState, Manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dpfeedback", version, about = "Verified feedback for dynamic-programming submissions")]
pub struct Cli {
    /// SMT solver executable (speaks SMT-LIB 2 on stdin).
    #[arg(long, global = true)]
    pub solver: Option<String>,
    /// Per-query solver timeout.
    #[arg(long, global = true, default_value_t = 3000)]
    pub timeout_ms: u64,
    /// Refinements per statement pair before the whole body is replaced.
    #[arg(long, global = true, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub delta: u64,
    /// Worker threads for verification; defaults to the available cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Input constraints file, overriding the one recorded at ingest.
    #[arg(long, global = true)]
    pub constraints: Option<PathBuf>,
    /// Output directory; defaults to the state file's directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, analyze and cluster every submission in a manifest.
    Ingest { manifest: PathBuf },
    /// List clusters, or record a reference for one.
    Review {
        state: PathBuf,
        #[command(subcommand)]
        action: Option<ReviewAction>,
    },
    /// Check every cluster member against its reference.
    Verify { state: PathBuf },
    /// Census, verdicts, faulty components and feedback size.
    Report {
        state: PathBuf,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReviewAction {
    List,
    /// Make an existing member the cluster's reference.
    Mark { cluster: String, submission: String },
    /// Ingest a new correct solution as the cluster's reference.
    Add {
        cluster: String,
        path: PathBuf,
        /// Submission id; defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
    },
}

/// Invocation problems: unreadable or malformed inputs named on the command line.
#[derive(Debug)]
pub struct Usage(pub anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(r: anyhow::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| Usage(e).into())
}

fn load_state(path: &Path) -> anyhow::Result<CorpusState> {
    usage(CorpusState::load(path))
}

fn verify_config(cli: &Cli, s: &CorpusState) -> anyhow::Result<VerifyConfig> {
    let text = match &cli.constraints {
        Some(p) => usage(std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))?,
        None => s.constraints.clone(),
    };
    let constraints = usage(InputConstraints::parse(&text).map_err(|e| anyhow::anyhow!("constraints: {e}")))?;
    let mut solver = SolverConfig { timeout_ms: cli.timeout_ms, ..SolverConfig::default() };
    if let Some(p) = &cli.solver {
        solver.path = p.clone();
    }
    Ok(VerifyConfig { solver, delta: cli.delta as usize, constraints })
}

fn out_dir(cli: &Cli, state: &Path) -> PathBuf {
    match (&cli.out, state.parent()) {
        (Some(d), _) => d.clone(),
        (None, Some(p)) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Runs one parsed command, writing human-readable output to `out`.
/// Returns the exit code for a command that ran to completion.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Ingest { manifest } => {
            let m = usage(Manifest::load(manifest))?;
            let s = ingest::ingest(&m).map_err(Usage)?;
            s.save(&m.state)?;
            write!(out, "{}", ingest::ingest_summary(&s))?;
            writeln!(out, "state written to {}", m.state.display())?;
        }
        Command::Review { state, action } => {
            let mut s = load_state(state)?;
            match action {
                None | Some(ReviewAction::List) => write!(out, "{}", review::list(&s))?,
                Some(ReviewAction::Mark { cluster, submission }) => {
                    review::mark(&mut s, cluster, submission)?;
                    s.save(state)?;
                    writeln!(out, "{submission} is now the reference of {}", review::resolve(&s, cluster)?.cluster_id)?;
                }
                Some(ReviewAction::Add { cluster, path, id }) => {
                    let id = review::add(&mut s, cluster, path, id.as_deref())?;
                    s.save(state)?;
                    writeln!(out, "{id} added as the reference of {}", review::resolve(&s, cluster)?.cluster_id)?;
                }
            }
        }
        Command::Verify { state } => {
            let mut s = load_state(state)?;
            let cfg = verify_config(cli, &s)?;
            let jobs = cli.jobs.map(|j| j as usize).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
            let run = verify::run(&mut s, &cfg, jobs)?;
            let dir = out_dir(cli, state);
            verify::write(&dir, &run)?;
            s.save(state)?;
            write!(out, "{}", run.summary.to_text())?;
            writeln!(out, "reports written to {}", dir.display())?;
            if !run.summary.soundness_violations.is_empty() {
                return Ok(EXIT_FAILED);
            }
        }
        Command::Report { state, json } => {
            let s = load_state(state)?;
            let r = report::build(&s);
            let text = r.to_text();
            let mut js = serde_json::to_string_pretty(&r)?;
            js.push('\n');
            if let Some(dir) = &cli.out {
                write_atomic(&dir.join("report.json"), js.as_bytes())?;
                write_atomic(&dir.join("report.txt"), text.as_bytes())?;
            }
            write!(out, "{}", if *json { &js } else { &text })?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the command. Errors go to
/// stderr; the return value is the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_FAILED
            }
        }
    }
}
