use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::Episode;
use super::exec::{step, TerminalStatus, Trajectory, TrajectoryRow};
use super::observe::{observe, ObserveParams};
use super::world::World;
use super::SimError;
use crate::agent::{AgentDecision, NavContext, NextLandmark, Planner};
use crate::elg::{self, step_motion, AgentPose, ElgConfig};
use crate::geometry::{UnitVector3, WorldPoint};
use crate::slkb::{KnowledgeBase, LandmarkParser, DEFAULT_MERGE_THRESHOLD, DEFAULT_PRUNE_RADIUS};
use crate::verbalizer::describe_paths;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub elg: ElgConfig,
    pub max_steps: usize,
    pub observe: ObserveParams,
    /// Upsert every observation into the knowledge base while flying.
    pub online_memory: bool,
    pub merge_threshold: f64,
    pub prune_radius: f64,
    /// A non-final target within this 3D distance counts as visited.
    pub visit_radius: f64,
    /// Seed for observation noise.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            elg: ElgConfig::default(),
            max_steps: 150,
            observe: ObserveParams::default(),
            online_memory: false,
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            prune_radius: DEFAULT_PRUNE_RADIUS,
            visit_radius: 10.0,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.elg.validate()?;
        self.observe.validate()?;
        if self.max_steps == 0 {
            return Err(SimError::InvalidParams(
                "max_steps must be at least 1".into(),
            ));
        }
        if !(self.visit_radius.is_finite() && self.visit_radius >= 0.0) {
            return Err(SimError::InvalidParams(
                "visit radius must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A failed episode and everything flown before the failure.
#[derive(Debug, Error)]
#[error("episode failed after {} steps: {error}", trajectory.rows.len())]
pub struct EpisodeFailure {
    pub trajectory: Trajectory,
    #[source]
    pub error: SimError,
}

/// Landmark the agent committed to after choosing a path.
#[derive(Debug, Clone)]
struct Target {
    index: usize,
    name: String,
    position: WorldPoint,
    /// Agent position when the target was chosen.
    origin: WorldPoint,
}

struct Driver<'a> {
    instruction: &'a str,
    landmarks: Vec<String>,
    visited: usize,
    target: Option<Target>,
    /// Direction of the last completed leg; candidate paths are described
    /// relative to it rather than to the yaw left by the final approach.
    leg_heading: Option<UnitVector3>,
    history: String,
    config: &'a RunConfig,
}

impl Driver<'_> {
    fn is_final(&self, t: &Target) -> bool {
        t.index + 1 >= self.landmarks.len()
    }

    fn advance(&mut self) {
        if let Some(t) = self.target.take() {
            self.visited = self.visited.max(t.index + 1);
            let d = t.position - t.origin;
            if let Ok(h) = UnitVector3::normalize(d.x, d.y, 0.0) {
                self.leg_heading = Some(h);
            }
        }
    }

    fn context(
        &self,
        pose: &AgentPose,
        kb: &KnowledgeBase,
        observation: &crate::agent::ObservationBundle,
    ) -> Result<(NavContext, Option<Vec<crate::verbalizer::PathDescription>>), SimError> {
        let mut ctx = NavContext::new(self.instruction, *pose);
        ctx.history = self.history.clone();
        ctx.visited_landmarks = self.landmarks[..self.visited.min(self.landmarks.len())].to_vec();
        ctx.observation = observation.clone();
        if self.landmarks.is_empty() || kb.is_empty() {
            return Ok((ctx, None));
        }
        if let Some(t) = &self.target {
            let (motion, _) = step_motion(&pose.heading, &pose.position, &t.position);
            ctx.next_landmark = Some(NextLandmark {
                name: t.name.clone(),
                motion,
                position: t.position,
            });
            return Ok((ctx, None));
        }
        if self.visited >= self.landmarks.len() {
            return Ok((ctx, None));
        }
        let retrieved = kb.retrieve(&self.landmarks)?;
        let unvisited = elg::select_unvisited(&retrieved, self.visited, self.config.elg.n_ahead);
        let anchor = AgentPose {
            position: pose.position,
            heading: self.leg_heading.unwrap_or(pose.heading),
        };
        let graph = elg::build(&anchor, &unvisited, &self.config.elg)?;
        let paths = describe_paths(&elg::enumerate_paths(&graph, &anchor));
        let list = paths.0.clone();
        ctx.path_descriptions = Some(paths);
        Ok((ctx, Some(list)))
    }

    /// Commits to the first waypoint of the chosen path.
    fn commit(
        &mut self,
        pose: &AgentPose,
        decision: &AgentDecision,
        paths: Option<&[crate::verbalizer::PathDescription]>,
    ) {
        let Some(paths) = paths else { return };
        if decision.selected_path_id < 0 {
            return;
        }
        if let Some(p) = paths.get(decision.selected_path_id as usize) {
            self.target = Some(Target {
                index: self.visited,
                name: self.landmarks[self.visited].clone(),
                position: p.waypoints[0],
                origin: pose.position,
            });
        }
    }
}

/// Flies `episode` until the planner stops or `config.max_steps` decisions
/// have been made.
///
/// Each step observes, optionally updates `kb`, marks a committed non-final
/// landmark visited once within `visit_radius`, and asks the planner. The
/// planner sees candidate paths while no landmark is committed, the
/// committed landmark otherwise, and neither when the instruction names no
/// landmarks or `kb` is empty. A stop while heading for a non-final
/// landmark marks it visited and re-plans within the same step. After a
/// visit, paths are described relative to the leg just flown.
pub fn run_episode(
    world: &World,
    episode: &Episode,
    planner: &dyn Planner,
    kb: &mut KnowledgeBase,
    parser: &dyn LandmarkParser,
    config: &RunConfig,
) -> Result<Trajectory, Box<EpisodeFailure>> {
    let mut trajectory = Trajectory {
        start: episode.start_pose,
        rows: Vec::new(),
        status: TerminalStatus::MaxSteps,
    };
    macro_rules! fail {
        ($e:expr) => {
            return Err(Box::new(EpisodeFailure {
                trajectory,
                error: $e.into(),
            }))
        };
    }
    if let Err(e) = config.validate() {
        fail!(e);
    }
    let landmarks = match parser.parse(&episode.instruction) {
        Ok(l) => l,
        Err(e) => fail!(e),
    };
    let mut driver = Driver {
        instruction: &episode.instruction,
        landmarks,
        visited: 0,
        target: None,
        leg_heading: None,
        history: String::new(),
        config,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pose = episode.start_pose;

    for index in 0..config.max_steps {
        let (observation, records) = observe(world, &pose, &config.observe, &mut rng);
        if config.online_memory && !records.is_empty() {
            for r in &records {
                if let Err(e) = kb.upsert(r, config.merge_threshold) {
                    fail!(e);
                }
            }
            if let Err(e) = kb.prune_positions(config.prune_radius) {
                fail!(e);
            }
        }
        if let Some(t) = &driver.target {
            if !driver.is_final(t) && pose.position.distance(&t.position) <= config.visit_radius {
                driver.advance();
            }
        }

        let mut decision;
        let mut replans = 0;
        loop {
            let (ctx, paths) = match driver.context(&pose, kb, &observation) {
                Ok(c) => c,
                Err(e) => fail!(e),
            };
            decision = match planner.plan_step(&ctx) {
                Ok(d) => d,
                Err(e) => fail!(e),
            };
            driver.history = decision.updated_history.clone();
            driver.commit(&pose, &decision, paths.as_deref());
            let non_final = driver.target.as_ref().is_some_and(|t| !driver.is_final(t));
            if decision.action.is_stop() && non_final && replans <= driver.landmarks.len() {
                driver.advance();
                replans += 1;
                continue;
            }
            break;
        }
        log::debug!(
            "{} step {index}: {} (visited {}/{})",
            episode.episode_id,
            decision.action,
            driver.visited,
            driver.landmarks.len()
        );

        if decision.action.is_stop() {
            trajectory.rows.push(TrajectoryRow {
                step: index,
                pose,
                action: decision.action,
            });
            trajectory.status = TerminalStatus::Stopped;
            return Ok(trajectory);
        }
        pose = match step(&pose, &decision.action) {
            Ok(p) => p,
            Err(e) => fail!(e),
        };
        trajectory.rows.push(TrajectoryRow {
            step: index,
            pose,
            action: decision.action,
        });
    }
    Ok(trajectory)
}
