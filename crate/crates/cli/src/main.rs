//! `probrely`: command-line front end.
//!
//! Exit status is 0 for VALID/true, 1 for INVALID/false and 2 for errors.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "probrely", version, about = "Exact probabilistic rely-guarantee checks")]
struct Cli {
    /// Enumeration limit for traces and policies. `PRG_CAP` overrides it.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse a module and check every proc elaborates to a feasible structure.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// List the traces of a proc.
    Traces {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "proc")]
        name: String,
        #[arg(long)]
        maximal: bool,
    },
    /// Scheduler semantics of a proc as vertex lists.
    Semantics {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "proc")]
        name: String,
        /// Initial state; all states when omitted.
        #[arg(long)]
        init: Option<String>,
    },
    /// Uniform random scheduling, compared against the semantics.
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "proc")]
        name: String,
        #[arg(long)]
        init: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sequential refinement of two procs.
    Refine {
        #[arg(long)]
        input: PathBuf,
        a: String,
        b: String,
    },
    /// Search for a t-simulation from A to B.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        a: String,
        b: String,
    },
    /// Check a quintuple {pre rely} component {guar post}.
    Quintuple {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        component: String,
        #[arg(long, default_value = "skip")]
        pre: String,
        #[arg(long, default_value = "skip")]
        rely: String,
        #[arg(long)]
        guar: String,
        /// A spec name, or comma-separated names matched atom by atom.
        #[arg(long)]
        post: String,
    },
    /// Combine two probability bounds: p1 + p2 - 1, certified when a
    /// module is given.
    Bound {
        #[arg(long)]
        p1: String,
        #[arg(long)]
        p2: String,
        #[arg(long, requires_all = ["left", "right", "init", "target"])]
        input: Option<PathBuf>,
        #[arg(long)]
        left: Option<String>,
        #[arg(long)]
        right: Option<String>,
        #[arg(long, default_value = "skip")]
        rely: String,
        #[arg(long)]
        init: Option<String>,
        /// Comma-separated target states for both sides.
        #[arg(long)]
        target: Option<String>,
    },
    /// The faulty sieve: bounds f and g, the exact probability, and checks.
    Sieve {
        #[arg(long, default_value_t = 15)]
        n: usize,
        #[arg(long, default_value = "9/10")]
        p: String,
        /// Emit a CSV sweep over p instead.
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Run the rule checks on the generated threads.
        #[arg(long)]
        verify: bool,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cap = match std::env::var("PRG_CAP") {
        Ok(v) => match v.parse() {
            Ok(c) => c,
            Err(_) => {
                eprintln!("error[dsl-cli/environment]: PRG_CAP must be a natural number, got `{v}`");
                return ExitCode::from(2);
            }
        },
        Err(_) => cli.cap,
    };
    match commands::run(cli.command, cap) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}
