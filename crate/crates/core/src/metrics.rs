//! Trajectory metrics: navigation error, success, oracle success, DTW,
//! normalised DTW and success-weighted DTW.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::WorldPoint;
use crate::sim::{Episode, Trajectory};

/// Success radius in meters.
pub const SUCCESS_THRESHOLD: f64 = 20.0;
/// Spacing used to densify reference paths, one forward step.
pub const REFERENCE_SPACING: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("empty point sequence")]
    EmptySequence,
    #[error("empty batch")]
    EmptyBatch,
}

/// Distance from the final position to `goal`.
pub fn nav_error(traj: &Trajectory, goal: &WorldPoint) -> Result<f64, MetricsError> {
    traj.final_position()
        .map(|p| p.distance(goal))
        .ok_or(MetricsError::EmptyTrajectory)
}

/// Whether the agent stopped within `threshold` (inclusive) of `goal`.
pub fn success(traj: &Trajectory, goal: &WorldPoint, threshold: f64) -> Result<bool, MetricsError> {
    Ok(nav_error(traj, goal)? <= threshold)
}

/// Closest approach to `goal` over every visited point.
pub fn min_goal_distance(traj: &Trajectory, goal: &WorldPoint) -> Result<f64, MetricsError> {
    traj.path_points()
        .iter()
        .map(|p| p.distance(goal))
        .min_by(f64::total_cmp)
        .ok_or(MetricsError::EmptyTrajectory)
}

/// Whether any visited point came within `threshold` of `goal`.
pub fn oracle_success(
    traj: &Trajectory,
    goal: &WorldPoint,
    threshold: f64,
) -> Result<bool, MetricsError> {
    Ok(min_goal_distance(traj, goal)? <= threshold)
}

/// Dynamic time warping with Euclidean point cost and match, insertion
/// and deletion moves. Two-row table, O(n·m) time.
pub fn dtw(pred: &[WorldPoint], reference: &[WorldPoint]) -> Result<f64, MetricsError> {
    if pred.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    let m = reference.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for p in pred {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let cost = p.distance(&reference[j - 1]);
            cur[j] = cost + prev[j - 1].min(prev[j]).min(cur[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// `exp(-dtw / (|reference| · threshold))`, in (0, 1].
pub fn ndtw(
    pred: &[WorldPoint],
    reference: &[WorldPoint],
    threshold: f64,
) -> Result<f64, MetricsError> {
    let d = dtw(pred, reference)?;
    Ok((-d / (reference.len() as f64 * threshold)).exp())
}

/// Inserts evenly spaced points so no gap exceeds `spacing`.
pub fn densify(points: &[WorldPoint], spacing: f64) -> Vec<WorldPoint> {
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            let a = points[i - 1];
            let len = a.distance(p);
            let pieces = (len / spacing).ceil() as usize;
            for k in 1..pieces {
                let t = k as f64 / pieces as f64;
                out.push(WorldPoint::new(
                    a.x + (p.x - a.x) * t,
                    a.y + (p.y - a.y) * t,
                    a.z + (p.z - a.z) * t,
                ));
            }
        }
        out.push(*p);
    }
    out
}

/// Reference path of an episode: start, then every ground-truth waypoint,
/// densified to one forward step.
pub fn reference_path(episode: &Episode) -> Vec<WorldPoint> {
    let mut pts = vec![episode.start_pose.position];
    pts.extend(episode.ground_truth_path.iter().copied());
    densify(&pts, REFERENCE_SPACING)
}

/// Success times nDTW against the episode's reference path.
pub fn sdtw(traj: &Trajectory, episode: &Episode, threshold: f64) -> Result<f64, MetricsError> {
    Ok(evaluate(traj, episode, threshold)?.sdtw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub ne: f64,
    pub sr: f64,
    pub osr: f64,
    pub dtw: f64,
    pub ndtw: f64,
    pub sdtw: f64,
}

pub fn evaluate(
    traj: &Trajectory,
    episode: &Episode,
    threshold: f64,
) -> Result<EvalResult, MetricsError> {
    let ne = nav_error(traj, &episode.goal)?;
    let sr = if ne <= threshold { 1.0 } else { 0.0 };
    let osr = if oracle_success(traj, &episode.goal, threshold)? {
        1.0
    } else {
        0.0
    };
    let reference = reference_path(episode);
    let pred = traj.path_points();
    let dtw = dtw(&pred, &reference)?;
    let ndtw = (-dtw / (reference.len() as f64 * threshold)).exp();
    Ok(EvalResult {
        ne,
        sr,
        osr,
        dtw,
        ndtw,
        sdtw: sr * ndtw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEval {
    pub episode_id: String,
    #[serde(flatten)]
    pub result: EvalResult,
}

/// Per-episode results and means. `sr`, `osr` and `sdtw` are percentages,
/// `ne` is meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub sr: f64,
    pub osr: f64,
    pub sdtw: f64,
    pub ne: f64,
    pub episodes: Vec<EpisodeEval>,
}

pub fn evaluate_batch(
    results: &[(Trajectory, Episode)],
    threshold: f64,
) -> Result<BatchReport, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let episodes = results
        .iter()
        .map(|(t, e)| {
            Ok(EpisodeEval {
                episode_id: e.episode_id.clone(),
                result: evaluate(t, e, threshold)?,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    let n = episodes.len() as f64;
    let mean = |f: fn(&EvalResult) -> f64| episodes.iter().map(|e| f(&e.result)).sum::<f64>() / n;
    Ok(BatchReport {
        sr: 100.0 * mean(|r| r.sr),
        osr: 100.0 * mean(|r| r.osr),
        sdtw: 100.0 * mean(|r| r.sdtw),
        ne: mean(|r| r.ne),
        episodes,
    })
}

impl BatchReport {
    /// Aligned text table: one row per episode, then the means.
    pub fn to_table(&self) -> String {
        let width = self
            .episodes
            .iter()
            .map(|e| e.episode_id.len())
            .max()
            .unwrap_or(0)
            .max("episode".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>5}  {:>5}  {:>7}",
            "episode", "NE(m)", "SR", "OSR", "SDTW"
        );
        for e in &self.episodes {
            let r = &e.result;
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.2}  {:>5.0}  {:>5.0}  {:>7.4}",
                e.episode_id, r.ne, r.sr, r.osr, r.sdtw
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.2}  {:>5.1}  {:>5.1}  {:>7.2}",
            "mean", self.ne, self.sr, self.osr, self.sdtw
        );
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain struct serializes")
    }
}
