use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::observe::{observe, ObserveParams};
use super::world::World;
use super::SimError;
use crate::elg::AgentPose;
use crate::geometry::WorldPoint;
use crate::slkb::{KnowledgeBase, DEFAULT_MERGE_THRESHOLD, DEFAULT_PRUNE_RADIUS};

/// Lawnmower sweep used to seed a knowledge base before any episode, in
/// place of recorded prior flights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageParams {
    /// Distance between sweep lanes and between poses along a lane, meters.
    pub spacing: f64,
    /// Flight altitude of the sweep, meters.
    pub altitude: f64,
    pub observe: ObserveParams,
    pub merge_threshold: f64,
    pub prune_radius: f64,
    pub seed: u64,
}

impl Default for CoverageParams {
    fn default() -> Self {
        Self {
            spacing: 50.0,
            altitude: 40.0,
            observe: ObserveParams::default(),
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            prune_radius: DEFAULT_PRUNE_RADIUS,
            seed: 0,
        }
    }
}

/// Boustrophedon poses over the world bounds: lanes along x, alternating
/// direction, stepping by `spacing` in y.
pub fn coverage_poses(
    world: &World,
    spacing: f64,
    altitude: f64,
) -> Result<Vec<AgentPose>, SimError> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(SimError::InvalidParams(
            "coverage spacing must be positive".into(),
        ));
    }
    let b = world.bounds;
    let count = |span: f64| (span / spacing).ceil() as usize + 1;
    let (nx, ny) = (count(b.width()), count(b.depth()));
    let mut poses = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = (b.min.y + j as f64 * spacing).min(b.max.y);
        let eastward = j % 2 == 0;
        for i in 0..nx {
            let i = if eastward { i } else { nx - 1 - i };
            let x = (b.min.x + i as f64 * spacing).min(b.max.x);
            poses.push(AgentPose::from_yaw(
                WorldPoint::new(x, y, altitude),
                if eastward { 0.0 } else { 180.0 },
            ));
        }
    }
    Ok(poses)
}

/// Flies the coverage sweep, upserting every observation, then prunes.
pub fn build_offline_kb(
    world: &World,
    kb: &mut KnowledgeBase,
    params: &CoverageParams,
) -> Result<(), SimError> {
    params.observe.validate()?;
    if world.landmarks.is_empty() {
        return Err(SimError::InvalidParams("world has no landmarks".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for pose in coverage_poses(world, params.spacing, params.altitude)? {
        let (_, records) = observe(world, &pose, &params.observe, &mut rng);
        for r in &records {
            kb.upsert(r, params.merge_threshold)?;
        }
    }
    kb.prune_positions(params.prune_radius)?;
    Ok(())
}
