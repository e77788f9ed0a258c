use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::agent::{ActionKind, AgentAction, FORWARD_STEP, TURN_STEP, VERTICAL_STEP};
use crate::elg::AgentPose;
use crate::geometry::{UnitVector3, WorldPoint};

/// Applies one non-stop decision to `pose`.
pub fn step(pose: &AgentPose, action: &AgentAction) -> Result<AgentPose, SimError> {
    let k = action.repetitions as f64;
    let mut next = *pose;
    match action.kind {
        ActionKind::Stop => return Err(SimError::StopNotExecutable),
        ActionKind::Forward => {
            let flat = UnitVector3::normalize(pose.heading.x(), pose.heading.y(), 0.0)?;
            let length = FORWARD_STEP * k;
            next.position = WorldPoint::new(
                pose.position.x + flat.x() * length,
                pose.position.y + flat.y() * length,
                pose.position.z,
            );
        }
        ActionKind::TurnLeft => next.heading = pose.heading.rotated_about_z(TURN_STEP * k),
        ActionKind::TurnRight => next.heading = pose.heading.rotated_about_z(-TURN_STEP * k),
        ActionKind::Ascend => next.position.z += VERTICAL_STEP * k,
        ActionKind::Descend => next.position.z -= VERTICAL_STEP * k,
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Stopped,
    MaxSteps,
}

/// One decision and the pose after executing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub pose: AgentPose,
    pub action: AgentAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: AgentPose,
    pub rows: Vec<TrajectoryRow>,
    pub status: TerminalStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Position after the last decision; `None` for an empty trajectory.
    pub fn final_position(&self) -> Option<WorldPoint> {
        self.rows.last().map(|r| r.pose.position)
    }

    /// Start position followed by the post-decision positions.
    pub fn positions(&self) -> Vec<WorldPoint> {
        std::iter::once(self.start.position)
            .chain(self.rows.iter().map(|r| r.pose.position))
            .collect()
    }

    /// Every position visited at single-execution grain, with consecutive
    /// duplicates removed. Empty for an empty trajectory.
    ///
    /// Every action is a straight translation (or none), so the intermediate
    /// positions are evenly spaced between consecutive rows.
    pub fn path_points(&self) -> Vec<WorldPoint> {
        if self.rows.is_empty() {
            return Vec::new();
        }
        let mut out = vec![self.start.position];
        let mut prev = self.start.position;
        for row in &self.rows {
            let next = row.pose.position;
            let n = row.action.repetitions.max(1);
            for j in 1..=n {
                let p = if j == n {
                    next
                } else {
                    let t = f64::from(j) / f64::from(n);
                    WorldPoint::new(
                        prev.x + (next.x - prev.x) * t,
                        prev.y + (next.y - prev.y) * t,
                        prev.z + (next.z - prev.z) * t,
                    )
                };
                if out
                    .last()
                    .is_none_or(|q| q.distance(&p) > DUPLICATE_TOLERANCE)
                {
                    out.push(p);
                }
            }
            prev = next;
        }
        out
    }
}

/// Consecutive path points closer than this are treated as one.
const DUPLICATE_TOLERANCE: f64 = 1e-9;

pub const TRAJECTORY_HEADER: &str = "step,x,y,z,heading_deg,action,repetitions";

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<(), SimError> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for r in &traj.rows {
        let p = r.pose.position;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            p.x,
            p.y,
            p.z,
            r.pose.yaw_degrees(),
            r.action.kind,
            r.action.repetitions
        )?;
    }
    Ok(())
}

/// Reads rows written by [`write_trajectory_csv`]. The start pose is not part
/// of the file; the status is `Stopped` when the last action is a stop.
pub fn read_trajectory_csv<R: BufRead>(input: R, start: AgentPose) -> Result<Trajectory, SimError> {
    let mut rows = Vec::new();
    let mut lines = input.lines();
    let bad = |line: usize, message: String| SimError::TrajectoryFormat { line, message };
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(TRAJECTORY_HEADER) {
        return Err(bad(1, format!("expected header `{TRAJECTORY_HEADER}`")));
    }
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 7 {
            return Err(bad(n, format!("expected 7 columns, found {}", cols.len())));
        }
        let num = |j: usize| -> Result<f64, SimError> {
            cols[j]
                .parse::<f64>()
                .map_err(|e| bad(n, format!("column {}: {e}", j + 1)))
        };
        let step_index: usize = cols[0].parse().map_err(|e| bad(n, format!("step: {e}")))?;
        let kind: ActionKind = cols[5].parse().map_err(|e| bad(n, format!("{e}")))?;
        let repetitions: u32 = cols[6]
            .parse()
            .map_err(|e| bad(n, format!("repetitions: {e}")))?;
        rows.push(TrajectoryRow {
            step: step_index,
            pose: AgentPose::from_yaw(WorldPoint::new(num(1)?, num(2)?, num(3)?), num(4)?),
            action: AgentAction::new(kind, repetitions),
        });
    }
    let status = match rows.last() {
        Some(r) if r.action.is_stop() => TerminalStatus::Stopped,
        _ => TerminalStatus::MaxSteps,
    };
    Ok(Trajectory {
        start,
        rows,
        status,
    })
}
