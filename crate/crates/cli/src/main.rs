mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evenloop_core::lab::ExhaustionFamily;
use evenloop_core::verify::Suite;
use evenloop_core::Error;

pub const BUILD: &str = concat!("evenloop-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Core(Error::StateSpaceTooLarge { .. } | Error::CoalescenceCap(_) | Error::StepCap(_)) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "evenloop", version, about = "Loop O(1), FK-Ising, uniform even subgraphs and Wilson's algorithm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw exact samples.
    Sample {
        #[command(subcommand)]
        model: SampleModel,
    },
    /// Write an exact probability table by enumeration.
    Exact {
        #[command(subcommand)]
        model: ExactModel,
    },
    /// Uniform spanning trees and cycle-popping checks.
    Wilson {
        #[command(subcommand)]
        cmd: WilsonCmd,
    },
    /// Run the exact verification suites over the test corpus.
    Verify(VerifyArgs),
    /// Exhaustion experiments on infinite families.
    Lab {
        #[command(subcommand)]
        cmd: LabCmd,
    },
    /// Inspect a graph source.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
}

#[derive(Subcommand, Debug)]
enum SampleModel {
    /// Loop O(1) samples through the FK coupling.
    Loop(SampleArgs),
    /// FK-Ising samples by coupling from the past.
    Fk(SampleArgs),
}

#[derive(Subcommand, Debug)]
enum ExactModel {
    Fk(ExactArgs),
    Loop(ExactArgs),
    Ising(ExactArgs),
}

#[derive(Subcommand, Debug)]
enum WilsonCmd {
    /// Uniform spanning trees rooted at the sink.
    Sample(WilsonArgs),
    /// Pop the same arrow stacks in several orders and compare.
    Popcheck(WilsonArgs),
}

#[derive(Subcommand, Debug)]
enum LabCmd {
    /// Window TV of free Loop O(1) between consecutive box sizes.
    Converge(LabArgs),
    /// Stabilization of the projected even spaces.
    Stabilize(LabArgs),
    /// Rung-cut parity of wired uniform even subgraphs on the ladder.
    Parity(LabArgs),
    /// Free against wired uniform even subgraphs on one window.
    Dichotomy(LabArgs),
}

#[derive(Subcommand, Debug)]
enum GraphCmd {
    Show(GraphOnlyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundaryMode {
    /// `{Δ}` on wired graphs, empty otherwise.
    Natural,
    Free,
    /// Wire the graph to a new Δ when it has none.
    Wired,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GhostMode {
    /// Attach a ghost to every vertex when a field parameter is positive.
    Auto,
    All,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpinMode {
    Plus,
    Minus,
    Summed,
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// `family:NAME:SIZE` (e.g. `family:grid:6`, `family:ladder:12`) or a JSON file.
    #[arg(long)]
    pub graph: String,
    #[arg(long, value_enum, default_value = "natural")]
    pub boundary: BoundaryMode,
    #[arg(long, value_enum, default_value = "auto")]
    pub ghost: GhostMode,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long = "p-h")]
    pub p_h: Option<f64>,
    /// Inverse temperature; sets `x = tanh β` and `p = 1 − e^{−2β}`.
    #[arg(long)]
    pub beta: Option<f64>,
    /// External field; sets `y = tanh h` and `p_h = 1 − e^{−2h}`.
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Spin of the ghost or Δ in the Ising table.
    #[arg(long, value_enum, default_value = "summed")]
    pub boundary_spin: SpinMode,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WilsonArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Sink vertex, or `auto` for Δ, then the ghost, then vertex 0.
    #[arg(long, default_value = "auto")]
    pub sink: String,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Stack seeds tried by `popcheck`.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// One suite, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Skip corpus graphs with more edges plus ghost edges than this.
    #[arg(long, default_value_t = 12)]
    pub max_edges: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl VerifyArgs {
    pub fn suites(&self) -> CliResult<Vec<Suite>> {
        if self.suite == "all" {
            Ok(Suite::ALL.to_vec())
        } else {
            self.suite
                .split(',')
                .map(|s| s.parse::<Suite>().map_err(CliError::from))
                .collect()
        }
    }
}

#[derive(Args, Debug)]
pub struct LabArgs {
    #[arg(long, default_value = "ladder")]
    pub family: ExhaustionFamily,
    /// Window radius: the window is the edge set of the box of size `k`.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Largest box size.
    #[arg(long, default_value_t = 12)]
    pub nmax: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    /// Compare on the rail pair of rung cut 0 instead of the box window (ladder only).
    #[arg(long)]
    pub rung_cut: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GraphOnlyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sample { model } => match model {
            SampleModel::Loop(a) => commands::sample_loop(&a),
            SampleModel::Fk(a) => commands::sample_fk(&a),
        },
        Command::Exact { model } => match model {
            ExactModel::Fk(a) => commands::exact_fk(&a),
            ExactModel::Loop(a) => commands::exact_loop(&a),
            ExactModel::Ising(a) => commands::exact_ising(&a),
        },
        Command::Wilson { cmd } => match cmd {
            WilsonCmd::Sample(a) => commands::wilson_sample(&a),
            WilsonCmd::Popcheck(a) => commands::wilson_popcheck(&a),
        },
        Command::Verify(a) => commands::verify(&a),
        Command::Lab { cmd } => match cmd {
            LabCmd::Converge(a) => commands::lab_converge(&a),
            LabCmd::Stabilize(a) => commands::lab_stabilize(&a),
            LabCmd::Parity(a) => commands::lab_parity(&a),
            LabCmd::Dichotomy(a) => commands::lab_dichotomy(&a),
        },
        Command::Graph { cmd } => match cmd {
            GraphCmd::Show(a) => commands::graph_show(&a),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evenloop: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
