//! Deterministic simulation harness.
//!
//! Seeded worlds of described landmarks, synthetic episodes with
//! instructions rendered from the true motions, a noise-configurable
//! observer standing in for the detector and recognizer, the discrete action
//! executor and the episode driver. Everything is a pure function of its
//! seeds: the world has no obstacles and flight is straight-line.

mod bench;
mod coverage;
mod episode;
mod exec;
mod observe;
mod runner;
mod world;

use thiserror::Error;

use crate::agent::AgentError;
use crate::elg::ElgError;
use crate::geometry::GeometryError;
use crate::slkb::SlkbError;

pub use bench::{
    ablation_table, lookahead_ablation, run_benchmark, BenchmarkConfig, BenchmarkOutcome,
};
pub use coverage::{build_offline_kb, coverage_poses, CoverageParams};
pub use episode::{synthesize_episode, Episode, EpisodeParams};
pub use exec::{
    read_trajectory_csv, step, write_trajectory_csv, TerminalStatus, Trajectory, TrajectoryRow,
};
pub use observe::{observe, view_for, ObserveParams};
pub use runner::{run_episode, EpisodeFailure, RunConfig};
pub use world::{
    generate_world, vocabulary, Bounds, NamedDistractor, World, WorldLandmark, WorldParams,
    CATEGORIES, COLORS, MATERIALS,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cannot place {count} landmarks at {spacing} m spacing")]
    InfeasibleDensity { count: usize, spacing: f64 },
    #[error(
        "episode of length {length} needs {length} distinct descriptions, world has {available}"
    )]
    EpisodeTooLong { length: usize, available: usize },
    #[error("no episode satisfies the constraints after {0} attempts")]
    NoEpisode(usize),
    #[error("stop is not executable; the episode driver handles it")]
    StopNotExecutable,
    #[error("trajectory file line {line}: {message}")]
    TrajectoryFormat { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Slkb(#[from] SlkbError),
    #[error(transparent)]
    Elg(#[from] ElgError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
