//! `loopcorrect`: belief propagation, loop-series corrections, brute-force
//! oracles and graph polynomials from the command line.

mod commands;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loopcorrect::Schedule;
use report::Format;

/// Exact inference by correcting loopy belief propagation with the loop series.
///
/// Exit codes: 0 success, 1 usage or I/O error, 2 belief propagation did not
/// converge, 3 an identity or exactness check failed. Set LOOPCORRECT_THREADS
/// to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "loopcorrect", version)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "table")]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run loopy belief propagation and report beliefs and the Bethe log Z.
    Lbp {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        lbp: LbpArgs,
    },
    /// Sum the loop series for Z, or for one node's marginal with --target.
    Loopseries {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        lbp: LbpArgs,
        /// Correct the marginal of this node.
        #[arg(long)]
        target: Option<usize>,
        /// Also report the series truncated to subsets of at most this size.
        #[arg(long)]
        max_size: Option<usize>,
        /// List every term: subset bitmask, size, r and the running sum.
        #[arg(long)]
        terms: bool,
    },
    /// Exact log Z and marginals by enumerating every state.
    Oracle {
        #[command(flatten)]
        model: ModelArg,
    },
    /// Compare the Bethe and loop-corrected answers against the oracle.
    Compare {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        lbp: LbpArgs,
        /// Largest accepted relative error in Z and absolute error in marginals.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// The bivariate polynomial θ_G(β, γ) of a graph.
    Theta {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_enum, default_value = "cd")]
        method: ThetaMethod,
        /// Cross-check against the other construction and the β = 1 identities.
        #[arg(long)]
        check: bool,
    },
    /// The integer polynomial ω_G(β).
    Omega {
        #[command(flatten)]
        graph: GraphArg,
        /// Check divisibility, the recurrence, the counting interpretation,
        /// the determinant form and, for regular graphs, the matching identity.
        #[arg(long)]
        check: bool,
    },
    /// The matching polynomial α_G(x).
    Matching {
        #[command(flatten)]
        graph: GraphArg,
        /// For regular graphs, check the identity linking α_G and ω_G.
        #[arg(long)]
        check: bool,
    },
    /// Write a random model: `tree N`, `cycle N`, `grid R C`, `example1`,
    /// `random N M`, `unicyclic C N`, or `factor` for a random factor model.
    Gen {
        /// Topology words, e.g. `grid 3 3`.
        #[arg(required = true, num_args = 1..)]
        topology: Vec<String>,
        /// Couplings are drawn uniformly from [-J, J].
        #[arg(long = "coupling", short = 'J', default_value_t = 1.0)]
        coupling: f64,
        /// Fields are drawn uniformly from [-h, h].
        #[arg(long = "field", short = 'H', default_value_t = 0.5)]
        field: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to this file instead of standard output.
        #[arg(long, short = 'o')]
        out: Option<std::path::PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// JSON model file, or `-` for standard input.
    #[arg(long)]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct GraphArg {
    /// Edge-list file (`N M` then `M` lines `a b`), or `-` for standard input.
    #[arg(long)]
    pub graph: String,
}

#[derive(Debug, Args)]
pub struct LbpArgs {
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Stop when the largest message change falls below this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Weight of the previous message in each update, in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, value_enum, default_value = "synchronous")]
    pub schedule: ScheduleArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ScheduleArg {
    Synchronous,
    Sequential,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Synchronous => Schedule::Synchronous,
            ScheduleArg::Sequential => Schedule::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ThetaMethod {
    Direct,
    Cd,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            if let Some(text) = &failure.output {
                print!("{text}");
            }
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
