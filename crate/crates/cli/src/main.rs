//! `aerialnav` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags,
//! unreadable or invalid inputs).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{PlannerKind, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "aerialnav",
    version,
    about = "Landmark-graph planning and simulation for instruction-following UAV navigation"
)]
struct Cli {
    /// TOML file with run settings; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for world, episode and noise generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for values of the settings file.
#[derive(Debug, Clone, Default, Args)]
struct Overrides {
    /// Landmarks ahead included in the graph.
    #[arg(long)]
    n_ahead: Option<usize>,
    /// Candidates kept for the first graph layer.
    #[arg(long)]
    n_next: Option<usize>,
    /// Successors kept per node in later layers.
    #[arg(long)]
    n_subseq: Option<usize>,
    /// Same-key positions closer than this are merged (meters).
    #[arg(long)]
    prune_radius: Option<f64>,
    /// Cosine similarity at which a new description joins an existing key.
    #[arg(long)]
    merge_threshold: Option<f64>,
    /// Decision cap per episode.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Success radius around the goal (meters).
    #[arg(long)]
    success_threshold: Option<f64>,
    #[arg(long, value_enum)]
    planner: Option<PlannerKind>,
    /// Observation position noise, standard deviation in meters.
    #[arg(long)]
    sigma_pos: Option<f64>,
    /// Observation dropout probability.
    #[arg(long)]
    p_drop: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded world (and optionally episodes) as JSON.
    GenWorld(commands::GenWorldArgs),
    /// Build a knowledge base file from a world or an observation log.
    ///
    /// With --world the drone flies a lawnmower sweep over the whole map,
    /// observing at every pose; this stands in for mining previously flown
    /// trajectories. With --log each line is one JSON landmark record.
    BuildKb {
        #[command(flatten)]
        args: commands::BuildKbArgs,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print retrieval, graph and path descriptions for one instruction.
    Plan {
        #[command(flatten)]
        args: commands::PlanArgs,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Fly episodes and write one trajectory CSV per episode.
    Run {
        #[command(flatten)]
        args: commands::RunArgs,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score trajectory CSVs against their episodes.
    Eval(commands::EvalArgs),
    /// Merge trajectories and landmarks into one plot-ready CSV.
    ///
    /// Columns: kind (trajectory | landmark), id (episode id or landmark
    /// index), step, x, y, z, heading_deg, action, repetitions, description.
    /// Columns that do not apply to a row are empty. Trajectory rows come
    /// first, by file name then step, followed by landmarks in world order.
    Export(commands::ExportArgs),
    /// Run the synthetic benchmark for several lookahead values.
    Bench {
        #[command(flatten)]
        args: commands::BenchArgs,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn settings(cli: &Cli, o: &Overrides) -> Result<Settings, CliError> {
    let mut s = Settings::load(cli.config.as_deref())?;
    macro_rules! set {
        ($($field:ident).+ <- $value:expr) => {
            if let Some(v) = $value {
                s.$($field).+ = v;
            }
        };
    }
    set!(n_ahead <- o.n_ahead);
    set!(n_next <- o.n_next);
    set!(n_subseq <- o.n_subseq);
    set!(prune_radius <- o.prune_radius);
    set!(merge_threshold <- o.merge_threshold);
    set!(max_steps <- o.max_steps);
    set!(success_threshold <- o.success_threshold);
    set!(planner <- o.planner);
    set!(noise.sigma_pos <- o.sigma_pos);
    set!(noise.p_drop <- o.p_drop);
    set!(seed <- cli.seed);
    s.validate()?;
    Ok(s)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::GenWorld(args) => {
            let s = settings(cli, &Overrides::default())?;
            commands::gen_world(args, &s)
        }
        Command::BuildKb { args, overrides } => {
            commands::build_kb(args, &settings(cli, overrides)?)
        }
        Command::Plan { args, overrides } => commands::plan(args, &settings(cli, overrides)?),
        Command::Run { args, overrides } => commands::run(args, &settings(cli, overrides)?),
        Command::Eval(args) => {
            let s = settings(cli, &Overrides::default())?;
            commands::eval(args, &s)
        }
        Command::Export(args) => commands::export(args),
        Command::Bench { args, overrides } => commands::bench(args, &settings(cli, overrides)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
