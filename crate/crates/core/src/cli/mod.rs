//! Command-line front end: single runs, sweeps, exhaustive verification,
//! memory audits and meeting-time measurements.
//!
//! Exit codes: 0 when every run matched or every check passed, 1 for
//! usage and configuration errors, 2 for stabilization or verification
//! failures.

mod commands;
mod config;
mod input;
mod records;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{config_args, merge_config};
pub use input::{parse_range_list, InputSpec};
pub use records::{AuditRow, MeetRow, MeetSummary, RunRecord, RunRow, SweepSummary, VerifyRow};

use crate::engine::{RewirePolicy, DEFAULT_MAX_STEPS};
use crate::oracle::DEFAULT_GUARD;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "anonet", version, about = "Bounded-memory protocols on anonymous networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Base seed for graph generation, input placement and scheduling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
    /// Activations the correct outputs must persist [default: 10·n·|E|].
    #[arg(long, global = true)]
    pub confirm_window: Option<u64>,
    /// Per-edge interaction rate.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub rate: f64,
    /// Write the activation trace of a run to this file.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
    /// Output format [default: csv for sweep, json otherwise].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// `none`, `swap:<period>`, or `swap:n` for one swap every n activations.
    #[arg(long, global = true, default_value = "none")]
    pub rewire: String,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Flat key=value file of default flags; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl GlobalOpts {
    pub fn rewire_for(&self, n: usize) -> Result<RewirePolicy, String> {
        if self.rewire.trim() == "swap:n" {
            return Ok(RewirePolicy::EdgeSwap { period: n as u64 });
        }
        self.rewire.parse()
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one protocol once and report the result record.
    #[command(args_override_self = true)]
    Run(RunArgs),
    /// Run a grid of sizes and seeds; CSV rows plus a JSON summary.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Exhaustively check stabilization on small instances.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Compare reachable-state counts with declared memory budgets.
    #[command(args_override_self = true)]
    Audit(AuditArgs),
    /// Measure the meeting time of two tokens under the scheduler.
    #[command(args_override_self = true)]
    Meet(MeetArgs),
}

pub const SUBCOMMANDS: &[&str] = &["run", "sweep", "verify", "audit", "meet"];

#[derive(Debug, Args)]
pub struct RunArgs {
    /// or, lsb:c, threshold:a:b[:c], bit:j[:nmax], estimate[:nmax],
    /// max-gate, min-gate, plurality:k, circuit:<file or s-expression>
    #[arg(long)]
    pub protocol: String,
    /// complete:n, cycle:n, path:n, star:n, gnp:n:p or file:path
    #[arg(long)]
    pub graph: String,
    /// Colors as `0,1,1`, counts as `0:5,1:3`, `half`, or `red:r`.
    #[arg(long)]
    pub input: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub protocol: String,
    /// complete, cycle, path, star or gnp:p
    #[arg(long)]
    pub family: String,
    /// Comma list or range of node counts.
    #[arg(long)]
    pub sizes: String,
    #[arg(long, default_value = "0..20")]
    pub seeds: String,
    #[arg(long, default_value = "half")]
    pub input: String,
    /// Sweep the red count instead of using `--input`.
    #[arg(long)]
    pub reds: Option<String>,
    /// Summary JSON path [default: <output>.summary.json, or stderr].
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub protocol: String,
    #[arg(long)]
    pub graph: String,
    #[arg(long, conflicts_with = "all_inputs")]
    pub input: Option<String>,
    /// Check every assignment of colors to nodes.
    #[arg(long)]
    pub all_inputs: bool,
    /// Configurations explored before an instance is SKIPPED.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    pub guard: usize,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(required = true)]
    pub protocols: Vec<String>,
    /// Largest sampled population [default: nmax for counting protocols, else 16].
    #[arg(long)]
    pub max_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MeetArgs {
    /// A single graph spec.
    #[arg(long, conflicts_with_all = ["family", "sizes"])]
    pub graph: Option<String>,
    #[arg(long, requires = "sizes")]
    pub family: Option<String>,
    #[arg(long, requires = "family")]
    pub sizes: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn execute(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match merge_config(args, SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{rendered}") } else { write!(stdout, "{rendered}") };
            return code;
        }
    };
    commands::dispatch(&cli, stdout, stderr)
}
