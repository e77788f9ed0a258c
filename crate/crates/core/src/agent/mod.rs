//! Planning agent.
//!
//! Every step the agent describes its views, summarises progress, reasons
//! over the candidate paths (or the next landmark) and picks a discrete
//! action with a repeat count. Two planners implement this contract: a
//! deterministic rule planner and a language-model planner that renders
//! the prompt templates under `prompts/v1` and parses the labelled reply.

mod llm_planner;
mod prompt;
mod reply;
mod rule;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elg::AgentPose;
use crate::geometry::{RelativeMotion, WorldPoint};
use crate::llm::BackendError;
use crate::template::TemplateError;
use crate::verbalizer::PathDescriptionSet;

pub use llm_planner::LlmPlanner;
pub use prompt::{
    assemble_prompt, attachments, LANDMARK_FREE_PROMPT, WITH_ELG_PROMPT, WITH_NEXT_LANDMARK_PROMPT,
};
pub use reply::{parse_decision, render_decision, ReplyError};
pub use rule::{
    arrival_bound, free_actions, refine_action, rule_select_path, RulePlanner, ARRIVAL_RADIUS,
    FORWARD_STEP, MAX_MEAN_MISMATCH, TURN_HYSTERESIS, TURN_STEP, VERTICAL_STEP, VERTICAL_TOLERANCE,
};

/// Cap on the repeat count of a single decision.
pub const MAX_REPETITIONS: u32 = 24;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("prompt mode {mode} does not match context: {reason}")]
    ModeMismatch { mode: PromptMode, reason: String },
    #[error("template error: {0}")]
    Template(#[from] TemplateError),
    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),
    #[error("malformed reply: {0}")]
    Reply(#[from] ReplyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Forward,
    TurnLeft,
    TurnRight,
    Ascend,
    Descend,
    Stop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 6] = [
        ActionKind::Forward,
        ActionKind::TurnLeft,
        ActionKind::TurnRight,
        ActionKind::Ascend,
        ActionKind::Descend,
        ActionKind::Stop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Forward => "forward",
            ActionKind::TurnLeft => "turn_left",
            ActionKind::TurnRight => "turn_right",
            ActionKind::Ascend => "ascend",
            ActionKind::Descend => "descend",
            ActionKind::Stop => "stop",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = ReplyError;

    /// Accepts the canonical names plus common spellings such as
    /// `move_forward`, `Turn Left` or `up`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .trim_matches(|c: char| c == '`' || c == '*' || c == '"' || c == '\'' || c == '.')
            .to_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        let kind = match norm.as_str() {
            "forward" | "move_forward" | "go_forward" | "fly_forward" | "move_ahead" => {
                ActionKind::Forward
            }
            "turn_left" | "left" | "rotate_left" => ActionKind::TurnLeft,
            "turn_right" | "right" | "rotate_right" => ActionKind::TurnRight,
            "ascend" | "up" | "go_up" | "move_up" | "rise" => ActionKind::Ascend,
            "descend" | "down" | "go_down" | "move_down" => ActionKind::Descend,
            "stop" | "halt" => ActionKind::Stop,
            _ => return Err(ReplyError::InvalidActionKind(s.trim().to_string())),
        };
        Ok(kind)
    }
}

/// One decision's action: `kind` executed `repetitions` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentAction {
    pub kind: ActionKind,
    pub repetitions: u32,
}

impl AgentAction {
    /// Clamps `repetitions` into `1..=MAX_REPETITIONS`; stop always has 1.
    pub fn new(kind: ActionKind, repetitions: u32) -> Self {
        let repetitions = if kind == ActionKind::Stop {
            1
        } else {
            repetitions.clamp(1, MAX_REPETITIONS)
        };
        Self { kind, repetitions }
    }

    pub fn stop() -> Self {
        Self::new(ActionKind::Stop, 1)
    }

    pub fn is_stop(&self) -> bool {
        self.kind == ActionKind::Stop
    }
}

impl fmt::Display for AgentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x{}", self.kind, self.repetitions)
    }
}

/// The six camera directions. `Bottom` is the bird's-eye view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Front,
    Left,
    Right,
    Back,
    Top,
    Bottom,
}

impl View {
    pub const ALL: [View; 6] = [
        View::Front,
        View::Left,
        View::Right,
        View::Back,
        View::Top,
        View::Bottom,
    ];

    /// Order used in prompts: front, bird's-eye, left, right, back, upward.
    pub const PROMPT_ORDER: [View; 6] = [
        View::Front,
        View::Bottom,
        View::Left,
        View::Right,
        View::Back,
        View::Top,
    ];

    pub fn label(self) -> &'static str {
        match self {
            View::Front => "Front view",
            View::Left => "Left view",
            View::Right => "Right view",
            View::Back => "Back view",
            View::Top => "Upward view",
            View::Bottom => "Bird's-eye view",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewContent {
    /// Pre-summarised scene text.
    Text(String),
    /// Image reference passed to the backend as an attachment.
    Image(String),
}

impl Default for ViewContent {
    fn default() -> Self {
        ViewContent::Text(String::new())
    }
}

/// Exactly six views, addressed by [`View`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObservationBundle {
    views: [ViewContent; 6],
}

impl ObservationBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_texts(texts: [(View, String); 6]) -> Self {
        let mut bundle = Self::default();
        for (view, text) in texts {
            bundle.set(view, ViewContent::Text(text));
        }
        bundle
    }

    pub fn get(&self, view: View) -> &ViewContent {
        &self.views[view.slot()]
    }

    pub fn set(&mut self, view: View, content: ViewContent) {
        self.views[view.slot()] = content;
    }

    pub fn iter(&self) -> impl Iterator<Item = (View, &ViewContent)> {
        View::ALL.into_iter().map(move |v| (v, self.get(v)))
    }
}

/// The landmark currently being approached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextLandmark {
    pub name: String,
    pub motion: RelativeMotion,
    pub position: WorldPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    WithElg,
    WithNextLandmark,
    LandmarkFree,
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::WithElg => "with_elg",
            PromptMode::WithNextLandmark => "with_next_landmark",
            PromptMode::LandmarkFree => "landmark_free",
        })
    }
}

/// Everything a planner sees at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavContext {
    pub instruction: String,
    pub history: String,
    pub visited_landmarks: Vec<String>,
    pub path_descriptions: Option<PathDescriptionSet>,
    pub next_landmark: Option<NextLandmark>,
    pub observation: ObservationBundle,
    pub pose: AgentPose,
}

impl NavContext {
    pub fn new(instruction: impl Into<String>, pose: AgentPose) -> Self {
        Self {
            instruction: instruction.into(),
            history: String::new(),
            visited_landmarks: Vec::new(),
            path_descriptions: None,
            next_landmark: None,
            observation: ObservationBundle::default(),
            pose,
        }
    }

    /// Mode implied by which of paths / next landmark is present.
    pub fn mode(&self) -> Result<PromptMode, AgentError> {
        match (&self.path_descriptions, &self.next_landmark) {
            (Some(_), Some(_)) => Err(AgentError::ModeMismatch {
                mode: PromptMode::WithElg,
                reason: "both candidate paths and a next landmark are set".into(),
            }),
            (Some(_), None) => Ok(PromptMode::WithElg),
            (None, Some(_)) => Ok(PromptMode::WithNextLandmark),
            (None, None) => Ok(PromptMode::LandmarkFree),
        }
    }

    pub fn check_mode(&self, mode: PromptMode) -> Result<(), AgentError> {
        let mismatch = |reason: &str| {
            Err(AgentError::ModeMismatch {
                mode,
                reason: reason.to_string(),
            })
        };
        match mode {
            PromptMode::WithElg => match &self.path_descriptions {
                None => return mismatch("no candidate paths"),
                Some(p) if p.is_empty() => return mismatch("candidate path set is empty"),
                _ => {}
            },
            PromptMode::WithNextLandmark if self.next_landmark.is_none() => {
                return mismatch("no next landmark")
            }
            _ => {}
        }
        let implied = self.mode()?;
        if implied != mode {
            return mismatch(&format!("context implies {implied}"));
        }
        Ok(())
    }
}

/// A planner's output for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub observation_description: String,
    pub navigation_progress: String,
    /// Path-selection reasoning, or landmark-following reasoning in
    /// next-landmark mode.
    pub path_reasoning: String,
    /// Candidate path id, or -1 for "own plan".
    pub selected_path_id: i64,
    /// Answer to "follow the next landmark", when asked.
    pub follow_next_landmark: Option<bool>,
    pub action_reasoning: String,
    pub action: AgentAction,
    pub updated_history: String,
    /// Set when an LLM reply could not be used and the rule planner
    /// produced this decision instead.
    #[serde(default)]
    pub fallback: bool,
}

impl AgentDecision {
    pub fn with_action(action: AgentAction) -> Self {
        Self {
            observation_description: String::new(),
            navigation_progress: String::new(),
            path_reasoning: String::new(),
            selected_path_id: -1,
            follow_next_landmark: None,
            action_reasoning: String::new(),
            action,
            updated_history: String::new(),
            fallback: false,
        }
    }
}

pub trait Planner: Send + Sync {
    fn name(&self) -> &str;

    fn plan_step(&self, ctx: &NavContext) -> Result<AgentDecision, AgentError>;
}

impl<P: Planner + ?Sized> Planner for &P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn plan_step(&self, ctx: &NavContext) -> Result<AgentDecision, AgentError> {
        (**self).plan_step(ctx)
    }
}

impl<P: Planner + ?Sized> Planner for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn plan_step(&self, ctx: &NavContext) -> Result<AgentDecision, AgentError> {
        (**self).plan_step(ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_aliases() {
        assert_eq!(
            "move_forward".parse::<ActionKind>().unwrap(),
            ActionKind::Forward
        );
        assert_eq!(
            "Turn Left".parse::<ActionKind>().unwrap(),
            ActionKind::TurnLeft
        );
        assert_eq!(
            "`descend`".parse::<ActionKind>().unwrap(),
            ActionKind::Descend
        );
        assert!("fly".parse::<ActionKind>().is_err());
    }

    #[test]
    fn action_clamps() {
        assert_eq!(AgentAction::new(ActionKind::Forward, 0).repetitions, 1);
        assert_eq!(
            AgentAction::new(ActionKind::Forward, 100).repetitions,
            MAX_REPETITIONS
        );
        assert_eq!(AgentAction::new(ActionKind::Stop, 5).repetitions, 1);
    }

    #[test]
    fn bundle_has_six_slots() {
        let mut b = ObservationBundle::new();
        b.set(View::Back, ViewContent::Text("tower".into()));
        assert_eq!(b.iter().count(), 6);
        assert_eq!(b.get(View::Back), &ViewContent::Text("tower".into()));
        assert_eq!(b.get(View::Front), &ViewContent::Text(String::new()));
    }
}
