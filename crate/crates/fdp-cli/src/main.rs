//! `fdp`: exact differential-privacy accounting from the command line.
//!
//! Subcommands: `compose` (exact composition of curves), `check` (order,
//! well-ordering, commutation, and freeness decisions), `figure`
//! (counter-example data as CSV), and `simulate` (adaptive strategies
//! against a privacy filter).
//!
//! Exit codes are stable: 0 success / property holds, 1 property fails
//! (refuting witness in the JSON report), 2 malformed input, 3 mixed
//! analytic and piecewise inputs without `--grid`, 4 an enumeration guard
//! tripped, 5 a parameter search found nothing.

mod commands;
mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fdp_core::Error;

#[derive(Parser)]
#[command(
    name = "fdp",
    version,
    about = "Exact accounting for differential privacy: composition, \
             ordering, filters, and counter-examples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compose two or more curves exactly and print the result as JSON.
    Compose(ComposeArgs),
    /// Decide order, well-ordering, commutation, or freeness properties.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Emit CSV data for the counter-example figures.
    Figure(FigureArgs),
    /// Run an adaptive strategy against a privacy filter.
    Simulate(SimulateArgs),
}

/// Arguments for `fdp compose`.
#[derive(Args)]
pub struct ComposeArgs {
    /// Curve specs: approx:EPS,DELTA | gdp:MU | agdp:MU,DELTA | delta:D |
    /// id | file:PATH | json:{...}
    #[arg(num_args = 2.., required = true)]
    pub inputs: Vec<String>,
    /// Write the composed curve JSON to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write alpha,beta samples on a 1001-point grid to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Sampling grid (cells) used when analytic and piecewise inputs mix.
    #[arg(long)]
    pub grid: Option<usize>,
}

/// Property checks under `fdp check`.
#[derive(Subcommand)]
pub enum CheckCommand {
    /// Compare two mechanisms in the leakage order.
    Order(OrderArgs),
    /// Scan a family's composition closure for incomparable pairs.
    #[command(name = "well-ordered")]
    WellOrdered(WellOrderedArgs),
    /// Test whether composing with a mechanism commutes with suprema.
    Commutes(CommutesArgs),
    /// Decide whether a budget is free for k-step adaptive adversaries.
    Free(FreeArgs),
}

/// Arguments for `fdp check order`.
#[derive(Args)]
pub struct OrderArgs {
    /// A curve to compare; give the flag twice for the two sides.
    #[arg(long = "a", value_name = "SPEC")]
    pub a: Vec<String>,
    /// The second curve (alternative to repeating --a).
    #[arg(long = "b", value_name = "SPEC")]
    pub b: Option<String>,
}

/// Arguments for `fdp check well-ordered`.
#[derive(Args)]
pub struct WellOrderedArgs {
    /// Generator curves of the family.
    #[arg(long, num_args = 1.., required = true, value_name = "SPEC")]
    pub family: Vec<String>,
    /// Composition depth to close the family under.
    #[arg(long)]
    pub depth: usize,
}

/// Arguments for `fdp check commutes`.
#[derive(Args)]
pub struct CommutesArgs {
    /// The mechanism composed onto the family.
    #[arg(long, value_name = "SPEC")]
    pub a: String,
    /// The family whose supremum is taken.
    #[arg(long, num_args = 1.., required = true, value_name = "SPEC")]
    pub family: Vec<String>,
}

/// Arguments for `fdp check free`.
#[derive(Args)]
pub struct FreeArgs {
    /// Generator curves the adversary may query.
    #[arg(long, num_args = 1.., required = true, value_name = "SPEC")]
    pub family: Vec<String>,
    /// The filter budget.
    #[arg(long, value_name = "SPEC", conflicts_with = "budget_from_corollary")]
    pub budget: Option<String>,
    /// Derive the budget from the family's crossing pair: intercept mass of
    /// the two-step sessions, initial slope of their envelope.
    #[arg(long)]
    pub budget_from_corollary: bool,
    /// Number of adaptive steps.
    #[arg(long)]
    pub k: usize,
}

/// Arguments for `fdp figure`.
#[derive(Args)]
pub struct FigureArgs {
    /// Which figure to emit: 1a | 1b | 2a | 2b | 3a | 3b.
    pub which: String,
    /// Directory the CSV (and, for 3a/3b, JSON) files are written into.
    #[arg(default_value = ".")]
    pub out_dir: PathBuf,
}

/// Arguments for `fdp simulate`.
#[derive(Args)]
pub struct SimulateArgs {
    /// Strategy file: JSON nodes {"query": SPEC-or-document, "children": [...]}.
    pub strategy: PathBuf,
    /// The budget the filter guards.
    #[arg(long, value_name = "SPEC")]
    pub budget: String,
    /// Maximum number of filter interactions per path.
    #[arg(long)]
    pub capacity: usize,
    /// Write the transcript JSON to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Stable mapping from library errors to process exit codes.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Invalid { .. } | Error::Parse(_) => 2,
        Error::MixedNeedsGrid => 3,
        Error::Guard(_) | Error::CapacityExhausted(_) => 4,
        Error::SearchFailure(_) => 5,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compose(args) => commands::compose(&args),
        Command::Check(CheckCommand::Order(args)) => commands::check_order(&args),
        Command::Check(CheckCommand::WellOrdered(args)) => commands::check_well_ordered(&args),
        Command::Check(CheckCommand::Commutes(args)) => commands::check_commutes(&args),
        Command::Check(CheckCommand::Free(args)) => commands::check_free(&args),
        Command::Figure(args) => commands::figure(&args),
        Command::Simulate(args) => commands::simulate(&args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
