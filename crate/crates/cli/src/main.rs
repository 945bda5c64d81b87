mod commands;
mod format;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::format::{ModelFile, ParseError};

#[derive(Parser, Debug)]
#[command(name = "bethe", version, about = "Belief propagation, Bethe free energy and graph polynomial toolkit")]
struct Cli {
    /// Emit the report as JSON instead of indented text.
    #[arg(long, global = true)]
    json: bool,
    /// Cap on worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run loopy belief propagation and report beliefs and log Z_B.
    Infer(InferArgs),
    /// Run one of the identity and oracle checks.
    Verify(VerifyArgs),
    /// Compute θ or ω of a graph.
    Poly(PolyArgs),
}

#[derive(clap::Args, Debug, Clone)]
pub struct LbpArgs {
    #[arg(long, value_enum, default_value_t = ScheduleArg::Parallel)]
    pub schedule: ScheduleArg,
    /// Weight of the previous message in each update.
    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleArg {
    Parallel,
    Sequential,
}

#[derive(clap::Args, Debug)]
pub struct InferArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub lbp: LbpArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start from random messages with this log-scale spread instead of uniform ones.
    #[arg(long, value_name = "SCALE")]
    pub random_init: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    BetheZeta,
    LoopSeries,
    MarginalLs,
    IndexSum,
    MatchingLs,
    Hashimoto,
    PolyIdentities,
}

#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub check: Check,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample count (bethe-zeta: interior points, default 200; matching-ls:
    /// Monte-Carlo sign vectors, default 100000).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Query vertex for marginal-ls.
    #[arg(long, default_value_t = 0)]
    pub vertex: usize,
    /// Restarts for index-sum.
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
    /// Pass threshold; defaults depend on the check.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write loop-series terms as CSV to this path.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub lbp: LbpArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Theta,
    Omega,
}

#[derive(clap::Args, Debug)]
pub struct PolyArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub which: Which,
    /// Evaluation point `β` or `β,γ`, as integers, fractions `p/q` or decimals.
    #[arg(long, value_name = "POINT", allow_hyphen_values = true)]
    pub eval: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(PathBuf, ParseError),
    Core(bethe_core::Error),
}

impl From<bethe_core::Error> for CliError {
    fn from(e: bethe_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use bethe_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Parse(..) => 2,
            CliError::Core(e) => match e {
                E::InvalidGraph(_)
                | E::UnknownEdge(_)
                | E::Disconnected
                | E::InvalidArgument(_)
                | E::InvalidModel(_)
                | E::CapExceeded { .. }
                | E::NotBinary
                | E::NotTree
                | E::Nullity { .. }
                | E::Shape(_) => 2,
                E::Boundary(_) | E::NotFixedPoint(_) | E::NotConverged(_) | E::SingularFactor(_) | E::Numeric(_) => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Parse(path, e) => format!("{}: {e}", path.display()),
            CliError::Core(e) => e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn load(path: &PathBuf) -> CliResult<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    ModelFile::parse(&text).map_err(|e| CliError::Parse(path.clone(), e))
}

fn run(cli: &Cli) -> CliResult<serde_json::Value> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Infer(a) => commands::infer(a),
        Command::Verify(a) => verify::verify(a),
        Command::Poly(a) => commands::poly(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => {
            let out = if cli.json { report::render_json(&v) } else { report::render_text(&v) };
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
