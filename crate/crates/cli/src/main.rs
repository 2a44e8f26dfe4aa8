//! `sbtw`: treewidth, model counting, backdoor search and instance
//! generation from the command line. Reports go to stdout as JSON, logs
//! to stderr.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sbtw_core::backdoor::DEFAULT_TW_THRESHOLD;
use sbtw_core::treewidth::DEFAULT_VERTEX_CAP;

/// Exit codes besides 0 (success) and 1 (I/O and other failures).
pub mod exit {
    pub const PARSE: u8 = 2;
    /// Invalid backdoor, proven absence or sb_t(F) > k.
    pub const NEGATIVE: u8 = 3;
    /// Undecided within the caps.
    pub const INCONCLUSIVE: u8 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "sbtw", version, about = "Strong backdoors into bounded incidence treewidth")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Treewidth bounds, exact value and a .td decomposition.
    Tw(TwArgs),
    /// Count satisfying assignments.
    Count(CountArgs),
    /// Find or verify strong backdoors.
    #[command(subcommand)]
    Backdoor(BackdoorCommand),
    /// Write an instance of a built-in family.
    Generate(GenerateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Auto,
    Dimacs,
    Gr,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Input file, or `-` for stdin.
    pub path: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// JSON id map for a .gr input (default: `<path>.map.json` if present).
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    /// The incidence graph of a CNF input.
    Incidence,
    /// A .gr input as it is.
    Raw,
}

#[derive(Args, Debug)]
pub struct TwArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = GraphKind::Incidence)]
    pub graph: GraphKind,
    /// Run the exact solver only up to this many vertices (at most 128).
    #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
    pub exact_cap: usize,
    /// Where to write the decomposition (default: `<path>.td`).
    #[arg(long)]
    pub td_out: Option<PathBuf>,
    /// Do not write a .td file.
    #[arg(long)]
    pub no_td: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CountMode {
    /// Direct count when tw ≤ threshold, else through a found backdoor.
    Auto,
    /// Dynamic program over a tree decomposition.
    Td,
    /// Enumerate all assignments.
    Brute,
    /// Through the backdoor given by --vars.
    Backdoor,
}

#[derive(Args, Debug)]
pub struct Caps {
    /// Largest graph handed to the exact treewidth solver.
    #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
    pub vertex_cap: usize,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = CountMode::Auto)]
    pub mode: CountMode,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Backdoor variables for --mode backdoor.
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<u32>,
    /// Count directly when tw(inc(F)) is at most this (default: t).
    #[arg(long)]
    pub tw_threshold: Option<usize>,
    /// Decomposition of inc(F) for --mode td (default: min-fill heuristic).
    #[arg(long)]
    pub td: Option<PathBuf>,
    #[command(flatten)]
    pub caps: Caps,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchMode {
    /// Smallest backdoor by exhaustive branching.
    Exact,
    /// Size ≤ 2^k − 1 through the branching recursion.
    Approx,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Strong,
    Deletion,
}

#[derive(Subcommand, Debug)]
enum BackdoorCommand {
    Find(FindArgs),
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct FindArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = 1)]
    pub kmax: usize,
    #[arg(long, value_enum, default_value_t = SearchMode::Exact)]
    pub mode: SearchMode,
    /// Approximation: hand formulas with tw(inc(F)) at most this to the exact search.
    #[arg(long, default_value_t = DEFAULT_TW_THRESHOLD)]
    pub tw_threshold: usize,
    #[command(flatten)]
    pub caps: Caps,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub vars: Vec<u32>,
    #[arg(long, value_enum, default_value_t = Kind::Strong)]
    pub kind: Kind,
    #[command(flatten)]
    pub caps: Caps,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Grid,
    GridX,
    Planted,
    Random,
    Wall,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Dimacs,
    Gr,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Grid or wall side, base size for planted, variables for random.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Clauses for random.
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    /// Clause width for random.
    #[arg(long, default_value_t = 3)]
    pub width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// dimacs writes the formula; gr writes its incidence graph (the wall
    /// family writes W_n itself).
    #[arg(long, value_enum, default_value_t = OutputFormat::Dimacs)]
    pub format: OutputFormat,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Id map for gr output (default: `<out>.map.json` when --out is given).
    #[arg(long)]
    pub map_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Tw(args) => commands::tw(&args),
        Command::Count(args) => commands::count(&args),
        Command::Backdoor(BackdoorCommand::Find(args)) => commands::find(&args),
        Command::Backdoor(BackdoorCommand::Verify(args)) => commands::verify(&args),
        Command::Generate(args) => commands::generate(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
