//! Deterministic reference planner.

use super::{
    ActionKind, AgentAction, AgentDecision, AgentError, NavContext, Planner, PromptMode,
    ViewContent, MAX_REPETITIONS,
};
use crate::elg::AgentPose;
use crate::geometry::{horizontal_angle, wrap_degrees, UnitVector3, WorldPoint};
use crate::instruction::{self, Clause, DirectionCue, TurnDirection, VerticalDirection};
use crate::verbalizer::PathDescriptionSet;

/// Paths whose mean per-step turn mismatch exceeds this are rejected.
pub const MAX_MEAN_MISMATCH: f64 = 90.0;
/// Bearing errors up to this many degrees are not corrected.
pub const TURN_HYSTERESIS: f64 = 7.5;
/// Vertical offsets up to this many meters are not corrected.
pub const VERTICAL_TOLERANCE: f64 = 1.0;
/// Horizontal distance at or below which the target counts as reached.
pub const ARRIVAL_RADIUS: f64 = 2.5;

/// Degrees per turn execution.
pub const TURN_STEP: f64 = 15.0;
/// Meters per ascend or descend execution.
pub const VERTICAL_STEP: f64 = 2.0;
/// Meters per forward execution.
pub const FORWARD_STEP: f64 = 5.0;
/// Climb used for a vertical cue without a stated height.
const DEFAULT_VERTICAL_METERS: f64 = 10.0;

fn normalize_name(s: &str) -> String {
    instruction::strip_determiners(s).to_lowercase()
}

/// Index of the path whose step turns best match the cues, or -1.
///
/// `clauses[k]` is aligned with step `k` of every path. A step with a turn
/// cue contributes `|wrap(θ_path - θ_cue)|`. When some paths name the same
/// landmarks as the clauses, only those are considered. Ties go to the
/// smaller id; without any cue the first considered path wins.
pub fn rule_select_path(clauses: &[Clause], paths: &PathDescriptionSet) -> i64 {
    if paths.is_empty() {
        return -1;
    }
    let names_match = |p: &crate::verbalizer::PathDescription| {
        p.steps
            .iter()
            .zip(clauses)
            .all(|(step, clause)| match &clause.landmark {
                Some(l) => normalize_name(l) == normalize_name(&step.landmark),
                None => true,
            })
    };
    let mut feasible: Vec<usize> = paths
        .iter()
        .filter(|p| names_match(p))
        .map(|p| p.path_id)
        .collect();
    if feasible.is_empty() {
        feasible = paths.iter().map(|p| p.path_id).collect();
    }

    let mut best: Option<(f64, usize, usize)> = None;
    for &id in &feasible {
        let path = paths.get(id).expect("ids are dense");
        let mut total = 0.0;
        let mut cues = 0;
        for (step, clause) in path.steps.iter().zip(clauses) {
            if let Some(cue) = clause.turn {
                total += wrap_degrees(step.motion.theta - cue.signed_degrees()).abs();
                cues += 1;
            }
        }
        if best.is_none_or(|(b, _, _)| total < b) {
            best = Some((total, cues, id));
        }
    }
    match best {
        Some((_, 0, id)) => id as i64,
        Some((total, cues, id)) if total / cues as f64 <= MAX_MEAN_MISMATCH => id as i64,
        _ => -1,
    }
}

fn reps(value: f64, step: f64) -> u32 {
    ((value / step).round() as u32).clamp(1, MAX_REPETITIONS)
}

/// Greedy grid controller toward `target`: fix the bearing, then the
/// altitude, then fly forward; stop once within [`ARRIVAL_RADIUS`]
/// horizontally and [`VERTICAL_TOLERANCE`] vertically.
///
/// Close to the target a single forward step can overshoot. When it would
/// not reduce the horizontal distance the controller stops instead, which
/// can only happen within [`arrival_bound`].
///
/// When the target is nearly behind the agent, `cue` picks the turn side.
pub fn refine_action(
    target: &WorldPoint,
    pose: &AgentPose,
    cue: Option<&DirectionCue>,
) -> AgentAction {
    let d = *target - pose.position;
    let horizontal = d.horizontal_norm();
    if horizontal > ARRIVAL_RADIUS {
        let bearing = UnitVector3::normalize(d.x, d.y, 0.0)
            .ok()
            .and_then(|b| horizontal_angle(&pose.heading, &b).ok())
            .unwrap_or(0.0);
        if bearing.abs() > TURN_HYSTERESIS {
            let mut left = bearing > 0.0;
            if bearing.abs() >= 180.0 - TURN_HYSTERESIS {
                match cue.map(|c| c.direction) {
                    Some(TurnDirection::Left) => left = true,
                    Some(TurnDirection::Right) => left = false,
                    _ => {}
                }
            }
            let kind = if left {
                ActionKind::TurnLeft
            } else {
                ActionKind::TurnRight
            };
            let magnitude = if left == (bearing > 0.0) {
                bearing.abs()
            } else {
                360.0 - bearing.abs()
            };
            return AgentAction::new(kind, reps(magnitude, TURN_STEP));
        }
    }
    if d.z.abs() > VERTICAL_TOLERANCE {
        let kind = if d.z > 0.0 {
            ActionKind::Ascend
        } else {
            ActionKind::Descend
        };
        return AgentAction::new(kind, reps(d.z.abs(), VERTICAL_STEP));
    }
    if horizontal > ARRIVAL_RADIUS {
        let n = ((horizontal / FORWARD_STEP).floor() as u32).clamp(1, MAX_REPETITIONS);
        let flat = UnitVector3::normalize(pose.heading.x(), pose.heading.y(), 0.0)
            .unwrap_or(UnitVector3::X);
        let len = FORWARD_STEP * n as f64;
        let after = (d.x - flat.x() * len).hypot(d.y - flat.y() * len);
        if after < horizontal {
            return AgentAction::new(ActionKind::Forward, n);
        }
    }
    AgentAction::stop()
}

/// Largest horizontal distance at which [`refine_action`] may stop:
/// [`ARRIVAL_RADIUS`] widened by the residual heading error of the turn grid.
pub fn arrival_bound() -> f64 {
    ARRIVAL_RADIUS / TURN_HYSTERESIS.to_radians().cos()
}

/// Primitive moves implied by an instruction without landmarks, in order.
pub fn free_actions(clauses: &[Clause]) -> Vec<AgentAction> {
    let mut out = Vec::new();
    for c in clauses {
        if let Some(cue) = c.turn {
            let signed = cue.signed_degrees();
            if signed.abs() >= TURN_HYSTERESIS {
                let kind = if signed > 0.0 {
                    ActionKind::TurnLeft
                } else {
                    ActionKind::TurnRight
                };
                out.push(AgentAction::new(kind, reps(signed.abs(), TURN_STEP)));
            }
        }
        if let Some(v) = c.vertical {
            let meters = c.vertical_meters.unwrap_or(DEFAULT_VERTICAL_METERS);
            let kind = match v {
                VerticalDirection::Ascend => ActionKind::Ascend,
                VerticalDirection::Descend => ActionKind::Descend,
            };
            out.push(AgentAction::new(kind, reps(meters, VERTICAL_STEP)));
        }
        if let Some(m) = c.forward_meters {
            out.push(AgentAction::new(ActionKind::Forward, reps(m, FORWARD_STEP)));
        }
    }
    out
}

const PROGRESS_TAG: &str = "Cue progress: ";

fn free_progress(history: &str) -> usize {
    history
        .rfind(PROGRESS_TAG)
        .and_then(|i| {
            history[i + PROGRESS_TAG.len()..]
                .split(|c: char| !c.is_ascii_digit())
                .next()
                .and_then(|n| n.parse().ok())
        })
        .unwrap_or(0)
}

fn describe_views(ctx: &NavContext) -> String {
    let seen: Vec<String> = ctx
        .observation
        .iter()
        .filter_map(|(v, c)| match c {
            ViewContent::Text(t) if !t.trim().is_empty() => Some(format!("{}: {}", v.label(), t)),
            _ => None,
        })
        .collect();
    if seen.is_empty() {
        "No landmarks in view.".into()
    } else {
        seen.join("; ")
    }
}

fn visited_summary(ctx: &NavContext) -> String {
    if ctx.visited_landmarks.is_empty() {
        "No landmarks visited yet.".into()
    } else {
        format!("Visited: {}.", ctx.visited_landmarks.join(", "))
    }
}

/// Clauses after the visited ones, i.e. aligned with the next path steps.
fn pending_clauses(ctx: &NavContext) -> Vec<Clause> {
    instruction::parse_clauses(&ctx.instruction)
        .into_iter()
        .filter(|c| c.landmark.is_some())
        .skip(ctx.visited_landmarks.len())
        .collect()
}

/// Deterministic planner; a pure function of the context.
#[derive(Debug, Clone, Copy, Default)]
pub struct RulePlanner;

impl RulePlanner {
    fn with_elg(&self, ctx: &NavContext) -> AgentDecision {
        let paths = ctx.path_descriptions.as_ref().expect("mode checked");
        let clauses = pending_clauses(ctx);
        let id = rule_select_path(&clauses, paths);
        let cue = clauses.first().and_then(|c| c.turn);
        let (action, path_reasoning, action_reasoning) = if id >= 0 {
            let path = paths.get(id as usize).expect("in range");
            let target = path.waypoints[0];
            (
                refine_action(&target, &ctx.pose, cue.as_ref()),
                format!("Path {id} best matches the instruction: {}", path.text),
                format!("Head for {} of path {id}.", path.steps[0].landmark),
            )
        } else {
            (
                AgentAction::new(ActionKind::Forward, 1),
                "No candidate path agrees with the instruction cues.".to_string(),
                "Advance and re-plan.".to_string(),
            )
        };
        AgentDecision {
            observation_description: describe_views(ctx),
            navigation_progress: visited_summary(ctx),
            path_reasoning,
            selected_path_id: id,
            follow_next_landmark: None,
            action_reasoning,
            action,
            updated_history: format!("{} Last action: {action}.", visited_summary(ctx)),
            fallback: false,
        }
    }

    fn with_next_landmark(&self, ctx: &NavContext) -> AgentDecision {
        let next = ctx.next_landmark.as_ref().expect("mode checked");
        let cue = pending_clauses(ctx).first().and_then(|c| c.turn);
        let action = refine_action(&next.position, &ctx.pose, cue.as_ref());
        AgentDecision {
            observation_description: describe_views(ctx),
            navigation_progress: visited_summary(ctx),
            path_reasoning: format!("Continue toward {}.", next.name),
            selected_path_id: -1,
            follow_next_landmark: Some(true),
            action_reasoning: format!("Grid step toward {}.", next.name),
            action,
            updated_history: format!("{} Last action: {action}.", visited_summary(ctx)),
            fallback: false,
        }
    }

    fn landmark_free(&self, ctx: &NavContext) -> AgentDecision {
        let actions = free_actions(&instruction::parse_clauses(&ctx.instruction));
        let done = free_progress(&ctx.history);
        let action = actions.get(done).copied().unwrap_or_else(AgentAction::stop);
        AgentDecision {
            observation_description: describe_views(ctx),
            navigation_progress: format!("{done} of {} instruction cues executed.", actions.len()),
            path_reasoning: String::new(),
            selected_path_id: -1,
            follow_next_landmark: None,
            action_reasoning: "Follow the instruction cues in order.".into(),
            action,
            updated_history: format!("{PROGRESS_TAG}{}. Last action: {action}.", done + 1),
            fallback: false,
        }
    }
}

impl Planner for RulePlanner {
    fn name(&self) -> &str {
        "rule"
    }

    fn plan_step(&self, ctx: &NavContext) -> Result<AgentDecision, AgentError> {
        Ok(match ctx.mode()? {
            PromptMode::WithElg => {
                ctx.check_mode(PromptMode::WithElg)?;
                self.with_elg(ctx)
            }
            PromptMode::WithNextLandmark => self.with_next_landmark(ctx),
            PromptMode::LandmarkFree => self.landmark_free(ctx),
        })
    }
}
