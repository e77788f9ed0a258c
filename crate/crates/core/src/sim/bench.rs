use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::coverage::{build_offline_kb, CoverageParams};
use super::episode::{synthesize_episode, Episode, EpisodeParams};
use super::exec::Trajectory;
use super::runner::{run_episode, RunConfig};
use super::world::{generate_world, WorldParams};
use super::SimError;
use crate::agent::Planner;
use crate::metrics::{evaluate_batch, BatchReport, SUCCESS_THRESHOLD};
use crate::slkb::{KnowledgeBase, RuleLandmarkParser};

/// Seeded synthetic benchmark: one world, one offline knowledge base and one
/// episode per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub episodes: usize,
    pub seed: u64,
    pub landmarks_per_episode: usize,
    pub world: WorldParams,
    pub episode: EpisodeParams,
    pub coverage: CoverageParams,
    pub run: RunConfig,
    pub success_threshold: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            seed: 0,
            landmarks_per_episode: 3,
            world: WorldParams {
                landmark_count: 12,
                distractors: 2,
                ..WorldParams::default()
            },
            episode: EpisodeParams {
                min_distractor_separation: Some(60.0),
                ..EpisodeParams::default()
            },
            coverage: CoverageParams::default(),
            run: RunConfig::default(),
            success_threshold: SUCCESS_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub results: Vec<(Trajectory, Episode)>,
    pub report: BatchReport,
}

impl BenchmarkOutcome {
    /// Mean navigation error over successful episodes; `None` without any.
    pub fn success_ne(&self) -> Option<f64> {
        let ok: Vec<f64> = self
            .report
            .episodes
            .iter()
            .filter(|e| e.result.sr > 0.0)
            .map(|e| e.result.ne)
            .collect();
        (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
    }
}

pub fn run_benchmark(
    config: &BenchmarkConfig,
    planner: &dyn Planner,
) -> Result<BenchmarkOutcome, SimError> {
    if config.episodes == 0 {
        return Err(SimError::InvalidParams(
            "benchmark needs at least one episode".into(),
        ));
    }
    let mut results = Vec::with_capacity(config.episodes);
    for i in 0..config.episodes as u64 {
        let seed = config.seed.wrapping_add(i);
        let world = generate_world(seed, &config.world)?;
        let episode =
            synthesize_episode(&world, seed, config.landmarks_per_episode, &config.episode)?;
        let mut kb = KnowledgeBase::default();
        build_offline_kb(&world, &mut kb, &config.coverage)?;
        let run = RunConfig {
            seed,
            ..config.run.clone()
        };
        let traj = run_episode(
            &world,
            &episode,
            planner,
            &mut kb,
            &RuleLandmarkParser,
            &run,
        )
        .map_err(|f| f.error)?;
        results.push((traj, episode));
    }
    let report = evaluate_batch(&results, config.success_threshold)?;
    Ok(BenchmarkOutcome { results, report })
}

/// Runs the benchmark once per lookahead value.
pub fn lookahead_ablation(
    config: &BenchmarkConfig,
    planner: &dyn Planner,
    n_ahead: &[usize],
) -> Result<Vec<(usize, BenchmarkOutcome)>, SimError> {
    n_ahead
        .iter()
        .map(|&n| {
            let mut c = config.clone();
            c.run.elg.n_ahead = n;
            run_benchmark(&c, planner).map(|o| (n, o))
        })
        .collect()
}

pub fn ablation_table(rows: &[(usize, BenchmarkOutcome)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7}  {:>6}  {:>6}  {:>6}  {:>8}",
        "n_ahead", "SR", "OSR", "SDTW", "NE(m)"
    );
    for (n, o) in rows {
        let r = &o.report;
        let _ = writeln!(
            out,
            "{n:>7}  {:>6.1}  {:>6.1}  {:>6.1}  {:>8.2}",
            r.sr, r.osr, r.sdtw, r.ne
        );
    }
    out
}
