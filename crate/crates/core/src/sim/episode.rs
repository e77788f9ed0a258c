use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::world::World;
use super::SimError;
use crate::elg::{step_motion, AgentPose};
use crate::geometry::{horizontal_angle, UnitVector3, WorldPoint};
use crate::instruction::parse_landmarks;
use crate::verbalizer::{definite, describe_steps, PathStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    pub start_pose: AgentPose,
    /// One waypoint per instruction landmark, at that landmark.
    pub ground_truth_path: Vec<WorldPoint>,
    /// World descriptions of the waypoints, in order.
    pub landmarks: Vec<String>,
    pub instruction: String,
    pub goal: WorldPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeParams {
    /// Horizontal leg length range, meters.
    pub min_leg: f64,
    pub max_leg: f64,
    /// When set, every same-description instance must lie at least this many
    /// degrees of bearing away from the true one, seen from the previous
    /// waypoint.
    pub min_distractor_separation: Option<f64>,
    /// Require each waypoint to be the closest instance of its description
    /// to the previous waypoint.
    pub nearest_instance: bool,
    pub attempts: usize,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        Self {
            min_leg: 60.0,
            max_leg: 300.0,
            min_distractor_separation: None,
            nearest_instance: true,
            attempts: 500,
        }
    }
}

fn flat_direction(from: &WorldPoint, to: &WorldPoint) -> Option<UnitVector3> {
    UnitVector3::normalize(to.x - from.x, to.y - from.y, 0.0).ok()
}

fn separated(from: &WorldPoint, chosen: &WorldPoint, other: &WorldPoint, min_deg: f64) -> bool {
    match (flat_direction(from, chosen), flat_direction(from, other)) {
        (Some(a), Some(b)) => horizontal_angle(&a, &b).is_ok_and(|d| d.abs() >= min_deg),
        _ => false,
    }
}

/// Samples a landmark sequence and renders its instruction from the true
/// relative motions.
pub fn synthesize_episode(
    world: &World,
    seed: u64,
    length: usize,
    params: &EpisodeParams,
) -> Result<Episode, SimError> {
    if length == 0 {
        return Err(SimError::InvalidParams(
            "episode length must be at least 1".into(),
        ));
    }
    if !(params.min_leg >= 0.0 && params.max_leg >= params.min_leg) {
        return Err(SimError::InvalidParams("leg range is empty".into()));
    }
    let available = world.descriptions().len();
    if length > available {
        return Err(SimError::EpisodeTooLong { length, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = world.bounds;
    for _ in 0..params.attempts {
        let start = WorldPoint::new(
            rng.random_range(b.min.x..=b.max.x),
            rng.random_range(b.min.y..=b.max.y),
            if b.max.z > b.min.z {
                rng.random_range(b.min.z..=b.max.z)
            } else {
                b.min.z
            },
        );
        let yaw = 15.0 * rng.random_range(0..24) as f64;
        let pose = AgentPose::from_yaw(start, yaw);
        if let Some(indices) = sample_sequence(world, &pose, length, params, &mut rng) {
            return render(world, seed, pose, &indices);
        }
    }
    Err(SimError::NoEpisode(params.attempts))
}

fn sample_sequence(
    world: &World,
    pose: &AgentPose,
    length: usize,
    params: &EpisodeParams,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::with_capacity(length);
    let mut prev = pose.position;
    for _ in 0..length {
        let mut options: Vec<usize> = (0..world.landmarks.len())
            .filter(|&i| {
                let l = &world.landmarks[i];
                if chosen
                    .iter()
                    .any(|&c| world.landmarks[c].description == l.description)
                {
                    return false;
                }
                let leg = prev.horizontal_distance(&l.position);
                if leg < params.min_leg || leg > params.max_leg {
                    return false;
                }
                let own = prev.distance(&l.position);
                world.instances(&l.description).all(|other| {
                    if other.position == l.position {
                        return true;
                    }
                    if params.nearest_instance && prev.distance(&other.position) <= own {
                        return false;
                    }
                    params
                        .min_distractor_separation
                        .is_none_or(|sep| separated(&prev, &l.position, &other.position, sep))
                })
            })
            .collect();
        options.shuffle(rng);
        let next = *options.first()?;
        prev = world.landmarks[next].position;
        chosen.push(next);
    }
    Some(chosen)
}

fn render(
    world: &World,
    seed: u64,
    pose: AgentPose,
    indices: &[usize],
) -> Result<Episode, SimError> {
    let mut facing = pose.heading;
    let mut cur = pose.position;
    let mut steps = Vec::with_capacity(indices.len());
    for &i in indices {
        let l = &world.landmarks[i];
        let (motion, next_facing) = step_motion(&facing, &cur, &l.position);
        steps.push(PathStep {
            landmark: definite(&l.description),
            motion,
        });
        facing = next_facing;
        cur = l.position;
    }
    let instruction = describe_steps(&steps);
    let landmarks: Vec<String> = indices
        .iter()
        .map(|&i| world.landmarks[i].description.clone())
        .collect();
    if parse_landmarks(&instruction) != landmarks {
        return Err(SimError::InvalidParams(format!(
            "instruction does not parse back to its landmarks: {instruction}"
        )));
    }
    let ground_truth_path: Vec<WorldPoint> = indices
        .iter()
        .map(|&i| world.landmarks[i].position)
        .collect();
    Ok(Episode {
        episode_id: format!("w{}-e{seed}", world.seed),
        start_pose: pose,
        goal: *ground_truth_path.last().expect("length checked"),
        ground_truth_path,
        landmarks,
        instruction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::{generate_world, WorldParams};

    fn world() -> World {
        generate_world(
            11,
            &WorldParams {
                landmark_count: 12,
                distractors: 2,
                ..WorldParams::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn single_reach_clause() {
        let e = synthesize_episode(&world(), 1, 1, &EpisodeParams::default()).unwrap();
        assert_eq!(e.instruction.matches("to reach").count(), 1);
        assert_eq!(e.goal, e.ground_truth_path[0]);
    }

    #[test]
    fn instruction_round_trips_and_is_deterministic() {
        let w = world();
        let params = EpisodeParams {
            min_distractor_separation: Some(60.0),
            ..EpisodeParams::default()
        };
        for seed in 0..20 {
            let e = synthesize_episode(&w, seed, 3, &params).unwrap();
            assert_eq!(parse_landmarks(&e.instruction), e.landmarks);
            assert_eq!(e.goal, *e.ground_truth_path.last().unwrap());
            assert_eq!(e, synthesize_episode(&w, seed, 3, &params).unwrap());
            let r = e.start_pose.yaw_degrees().rem_euclid(15.0);
            assert!(r.min(15.0 - r) < 1e-9);
        }
    }

    #[test]
    fn separation_holds() {
        let w = world();
        let params = EpisodeParams {
            min_distractor_separation: Some(60.0),
            ..EpisodeParams::default()
        };
        let e = synthesize_episode(&w, 5, 3, &params).unwrap();
        let mut prev = e.start_pose.position;
        for (wp, desc) in e.ground_truth_path.iter().zip(&e.landmarks) {
            for other in w.instances(desc).filter(|o| o.position != *wp) {
                assert!(separated(&prev, wp, &other.position, 60.0));
                assert!(prev.distance(&other.position) > prev.distance(wp));
            }
            prev = *wp;
        }
    }

    #[test]
    fn too_long() {
        let w = world();
        assert!(matches!(
            synthesize_episode(&w, 0, 13, &EpisodeParams::default()),
            Err(SimError::EpisodeTooLong {
                length: 13,
                available: 12
            })
        ));
    }
}
