use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod grid;
mod output;

/// Invalid command-line input detected after parsing.
#[derive(Debug)]
pub struct ArgError(pub String);

impl std::fmt::Display for ArgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ArgError {}

#[derive(Parser, Debug)]
#[command(
    name = "tasep",
    version,
    about = "Parallel TASEP on a ring with a blockage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed forms and finite-size sums.
    #[command(subcommand)]
    Exact(ExactCommand),
    /// Exact stationary law of a small ring, one CSV row per state.
    Oracle(OracleArgs),
    /// Current estimate at one parameter point.
    Simulate(SimulateArgs),
    /// Current estimates over a (p, ε) grid.
    Sweep(SweepArgs),
    /// Coarse-grained density profiles, one per ε.
    Density(DensityArgs),
    /// Smallest ε that moves the current by more than a relative tolerance.
    Threshold(ThresholdArgs),
}

#[derive(Subcommand, Debug)]
pub enum ExactCommand {
    /// Current of the unblocked ring in the large-size limit.
    Current {
        #[arg(long)]
        omega: f64,
    },
    /// Current of the rule-184 ring with blockage in the large-size limit.
    BlockageCurrent {
        #[arg(long)]
        eps: f64,
    },
    /// Exact current of a half-filled ring of 2L sites.
    FiniteCurrent {
        #[arg(long = "L")]
        half: usize,
        #[arg(long)]
        omega: f64,
    },
    /// Number of half-filled configurations with l trains, for every l.
    Nl {
        #[arg(long = "L")]
        half: usize,
    },
    /// Numeric maximiser of the saddle-point exponent.
    Saddle {
        /// Unblocked exponent at jump weight ω.
        #[arg(long, conflicts_with = "eps", required_unless_present = "eps")]
        omega: Option<f64>,
        /// Blockage exponent at intensity ε.
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Semantics {
    Bernoulli,
    Renormalized,
}

impl From<Semantics> for tasep::BlockageSemantics {
    fn from(s: Semantics) -> Self {
        match s {
            Semantics::Bernoulli => tasep::BlockageSemantics::BernoulliAttempt,
            Semantics::Renormalized => tasep::BlockageSemantics::RenormalizedWeight,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Init {
    Random,
    Alternating,
    Queue,
}

impl From<Init> for tasep::montecarlo::InitialState {
    fn from(i: Init) -> Self {
        use tasep::montecarlo::InitialState;
        match i {
            Init::Random => InitialState::RandomHalfFilled,
            Init::Alternating => InitialState::HalfFilledAlternating,
            Init::Queue => InitialState::Queue,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Snapshot,
    Average,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub sites: usize,
    #[arg(long)]
    pub particles: usize,
    #[arg(long, required_unless_present = "rule184")]
    pub omega: Option<f64>,
    /// Use the ω → ∞ kernel.
    #[arg(long, conflicts_with = "omega")]
    pub rule184: bool,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Semantics::Bernoulli)]
    pub semantics: Semantics,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Options shared by the simulation commands.
#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long = "L")]
    pub half: usize,
    /// Burn-in steps; defaults to ceil(2 (L/p) ln L).
    #[arg(long)]
    pub burnin: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub measure_steps: u64,
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Init::Random)]
    pub init: Init,
    #[arg(long, value_enum, default_value_t = Semantics::Bernoulli)]
    pub semantics: Semantics,
    /// CSV destination; stdout when absent. A manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Grid of jump probabilities, e.g. `0.001,0.05:1:0.05`.
    #[arg(long)]
    pub p: String,
    /// Grid of blockage intensities, e.g. `0:1:0.05`.
    #[arg(long)]
    pub eps: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[arg(long)]
    pub p: f64,
    /// Single value or grid; one profile per value.
    #[arg(long, default_value = "0")]
    pub eps: String,
    #[arg(long, value_enum, default_value_t = Mode::Average)]
    pub mode: Mode,
    #[arg(long, default_value_t = 10)]
    pub bin_width: usize,
    /// Also write a plain PGM image, one row per ε.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    /// Grid of jump probabilities.
    #[arg(long, default_value = "0.25:1:0.25")]
    pub p: String,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

/// 2 for bad arguments, 3 when a size guard trips, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ArgError>().is_some() {
            return 2;
        }
        match cause.downcast_ref::<tasep::Error>() {
            Some(tasep::Error::InvalidArgument(_)) => return 2,
            Some(tasep::Error::StateSpaceTooLarge { .. }) => return 3,
            _ => {}
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Exact(cmd) => commands::exact(cmd),
        Command::Oracle(args) => commands::oracle(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Density(args) => commands::density(args),
        Command::Threshold(args) => commands::threshold(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
