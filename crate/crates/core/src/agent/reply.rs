//! Labelled reply grammar.
//!
//! A reply is a sequence of `Label: value` lines using the output field
//! names of the prompts. Labels match case-insensitively and may carry
//! markdown decoration (`**Action**:`, `- Action:`, `### Action:`). Lines
//! that do not start with a known label continue the previous field.
//!
//! Mandatory: Observation Description, Navigation Progress, Action, Number
//! of Executions. A missing Selected Path ID reads as -1.

use thiserror::Error;

use super::{ActionKind, AgentAction, AgentDecision, MAX_REPETITIONS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplyError {
    #[error("missing fields: {}", .0.join(", "))]
    MissingFields(Vec<String>),
    #[error("invalid action kind `{0}`")]
    InvalidActionKind(String),
    #[error("repetitions must be ≥ 1 (got `{0}`)")]
    InvalidRepetitions(String),
    #[error("invalid path id `{0}`")]
    InvalidPathId(String),
    #[error("invalid follow answer `{0}`")]
    InvalidFollow(String),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Observation,
    Progress,
    PathReasoning,
    LandmarkReasoning,
    SelectedPath,
    Follow,
    ActionReasoning,
    Action,
    Calculation,
    Executions,
    History,
}

const LABELS: &[(&str, Field)] = &[
    ("observation description", Field::Observation),
    ("navigation progress", Field::Progress),
    ("reasoning for path selection", Field::PathReasoning),
    ("reasoning for landmark to follow", Field::LandmarkReasoning),
    ("selected path id", Field::SelectedPath),
    ("whether to follow the next landmark", Field::Follow),
    ("action reasoning", Field::ActionReasoning),
    ("action", Field::Action),
    ("calculation for number of executions", Field::Calculation),
    ("number of executions", Field::Executions),
    ("updated history", Field::History),
];

const FIELD_COUNT: usize = 11;

fn slot(f: Field) -> usize {
    LABELS
        .iter()
        .position(|(_, g)| *g == f)
        .expect("every field has a label")
}

fn label_of(f: Field) -> &'static str {
    match f {
        Field::Observation => "Observation Description",
        Field::Progress => "Navigation Progress",
        Field::PathReasoning => "Reasoning for Path Selection",
        Field::LandmarkReasoning => "Reasoning for Landmark to Follow",
        Field::SelectedPath => "Selected Path ID",
        Field::Follow => "Whether to Follow the Next Landmark",
        Field::ActionReasoning => "Action Reasoning",
        Field::Action => "Action",
        Field::Calculation => "Calculation for Number of Executions",
        Field::Executions => "Number of Executions",
        Field::History => "Updated History",
    }
}

/// Splits `line` into a known field and its value.
fn split_label(line: &str) -> Option<(Field, &str)> {
    let trimmed = line
        .trim_start()
        .trim_start_matches(['#', '-', '*', ' '])
        .trim_start();
    let colon = trimmed.find(':')?;
    let label = trimmed[..colon]
        .trim()
        .trim_matches('*')
        .trim()
        .to_lowercase();
    let field = LABELS.iter().find(|(l, _)| *l == label)?.1;
    let value = trimmed[colon + 1..].trim_start_matches('*');
    Some((field, value.trim()))
}

fn first_integer(value: &str) -> Option<&str> {
    let start = value.find(|c: char| c.is_ascii_digit() || c == '-')?;
    let rest = &value[start..];
    let end = rest
        .char_indices()
        .skip(1)
        .find(|(_, c)| !c.is_ascii_digit())
        .map(|(i, _)| i)
        .unwrap_or(rest.len());
    Some(&rest[..end])
}

pub fn parse_decision(reply: &str) -> Result<AgentDecision, ReplyError> {
    let mut values: [Option<String>; FIELD_COUNT] = Default::default();
    let mut current: Option<usize> = None;
    for line in reply.lines() {
        if let Some((field, value)) = split_label(line) {
            let i = slot(field);
            values[i] = Some(value.to_string());
            current = Some(i);
        } else if let Some(i) = current {
            let extra = line.trim();
            if extra.is_empty() || extra == "```" {
                continue;
            }
            let v = values[i].get_or_insert_with(String::new);
            if !v.is_empty() {
                v.push('\n');
            }
            v.push_str(extra);
        }
    }
    let take = |f: Field| values[slot(f)].clone();

    let missing: Vec<String> = [
        Field::Observation,
        Field::Progress,
        Field::Action,
        Field::Executions,
    ]
    .into_iter()
    .filter(|f| values[slot(*f)].is_none())
    .map(|f| label_of(f).to_string())
    .collect();
    if !missing.is_empty() {
        return Err(ReplyError::MissingFields(missing));
    }

    let kind: ActionKind = take(Field::Action).expect("checked").parse()?;
    let raw_reps = take(Field::Executions).expect("checked");
    let reps_token =
        first_integer(&raw_reps).ok_or_else(|| ReplyError::InvalidRepetitions(raw_reps.clone()))?;
    let reps: i64 = reps_token
        .parse()
        .map_err(|_| ReplyError::InvalidRepetitions(raw_reps.clone()))?;
    if reps < 1 {
        return Err(ReplyError::InvalidRepetitions(raw_reps));
    }
    let action = AgentAction::new(kind, reps.min(MAX_REPETITIONS as i64) as u32);

    let selected_path_id = match take(Field::SelectedPath) {
        None => -1,
        Some(raw) => {
            let token =
                first_integer(&raw).ok_or_else(|| ReplyError::InvalidPathId(raw.clone()))?;
            let id: i64 = token
                .parse()
                .map_err(|_| ReplyError::InvalidPathId(raw.clone()))?;
            if id < -1 {
                return Err(ReplyError::InvalidPathId(raw));
            }
            id
        }
    };

    let follow_next_landmark = match take(Field::Follow) {
        None => None,
        Some(raw) => {
            let norm = raw
                .trim()
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
                .replace(['_', '-'], " ");
            match norm.as_str() {
                "follow" | "yes" => Some(true),
                "not follow" | "no" | "do not follow" => Some(false),
                _ => return Err(ReplyError::InvalidFollow(raw)),
            }
        }
    };

    let path_reasoning = take(Field::PathReasoning)
        .or_else(|| take(Field::LandmarkReasoning))
        .unwrap_or_default();

    Ok(AgentDecision {
        observation_description: take(Field::Observation).expect("checked"),
        navigation_progress: take(Field::Progress).expect("checked"),
        path_reasoning,
        selected_path_id,
        follow_next_landmark,
        action_reasoning: take(Field::ActionReasoning).unwrap_or_default(),
        action,
        updated_history: take(Field::History).unwrap_or_default(),
        fallback: false,
    })
}

/// Canonical reply text for `decision`; [`parse_decision`] inverts it.
pub fn render_decision(decision: &AgentDecision) -> String {
    let mut lines = vec![
        (Field::Observation, decision.observation_description.clone()),
        (Field::Progress, decision.navigation_progress.clone()),
    ];
    match decision.follow_next_landmark {
        Some(follow) => {
            lines.push((Field::LandmarkReasoning, decision.path_reasoning.clone()));
            lines.push((
                Field::Follow,
                if follow { "follow" } else { "not follow" }.to_string(),
            ));
        }
        None => lines.push((Field::PathReasoning, decision.path_reasoning.clone())),
    }
    lines.push((Field::SelectedPath, decision.selected_path_id.to_string()));
    lines.push((Field::ActionReasoning, decision.action_reasoning.clone()));
    lines.push((Field::Action, decision.action.kind.to_string()));
    lines.push((Field::Executions, decision.action.repetitions.to_string()));
    lines.push((Field::History, decision.updated_history.clone()));
    lines
        .into_iter()
        .map(|(f, v)| format!("{}: {}", label_of(f), v))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WELL_FORMED: &str = "\
**Observation Description**: A gray tower ahead.
**Navigation Progress**: Heading to the tower.
**Reasoning for Path Selection**: Next landmark is the tower.
It lies to the left.
**Selected Path ID**: 2
**Action Reasoning**: Turn to face it.
**Action**: turn_left
**Calculation for Number of Executions**: 15 x 6 = 90
**Number of Executions**: 6
**Updated History**: Saw the tower.";

    #[test]
    fn parses_well_formed() {
        let d = parse_decision(WELL_FORMED).unwrap();
        assert_eq!(d.action, AgentAction::new(ActionKind::TurnLeft, 6));
        assert_eq!(d.selected_path_id, 2);
        assert_eq!(
            d.path_reasoning,
            "Next landmark is the tower.\nIt lies to the left."
        );
        assert_eq!(d.updated_history, "Saw the tower.");
        assert_eq!(d.follow_next_landmark, None);
    }

    #[test]
    fn rejects_bad_action() {
        let reply = WELL_FORMED.replace("turn_left", "fly");
        let err = parse_decision(&reply).unwrap_err();
        assert!(err.to_string().starts_with("invalid action kind"));
    }

    #[test]
    fn rejects_zero_repetitions() {
        let reply = WELL_FORMED.replace("Executions**: 6", "Executions**: 0");
        let err = parse_decision(&reply).unwrap_err();
        assert!(err.to_string().starts_with("repetitions must be ≥ 1"));
    }

    #[test]
    fn lists_missing_fields() {
        let err = parse_decision("Action: stop").unwrap_err();
        assert_eq!(
            err,
            ReplyError::MissingFields(vec![
                "Observation Description".into(),
                "Navigation Progress".into(),
                "Number of Executions".into(),
            ])
        );
    }

    #[test]
    fn defaults_and_caps() {
        let d = parse_decision(
            "- Observation Description: x\n- Navigation Progress: y\n- Action: move forward\n- Number of Executions: 40 times",
        )
        .unwrap();
        assert_eq!(d.selected_path_id, -1);
        assert_eq!(
            d.action,
            AgentAction::new(ActionKind::Forward, MAX_REPETITIONS)
        );
    }

    #[test]
    fn follow_answer() {
        let reply = "Observation Description: a\nNavigation Progress: b\nWhether to Follow the Next Landmark: Not follow\nAction: stop\nNumber of Executions: 3";
        let d = parse_decision(reply).unwrap();
        assert_eq!(d.follow_next_landmark, Some(false));
        assert_eq!(d.action, AgentAction::stop());
    }

    fn text() -> impl Strategy<Value = String> {
        "[a-z][a-z ,.]{0,30}[a-z.]".prop_map(|s| s)
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(
            obs in text(), prog in text(), reason in text(), act_reason in text(), hist in text(),
            id in -1i64..20, kind in 0usize..6, reps in 1u32..=24, follow in proptest::option::of(any::<bool>()),
        ) {
            let d = AgentDecision {
                observation_description: obs,
                navigation_progress: prog,
                path_reasoning: reason,
                selected_path_id: id,
                follow_next_landmark: follow,
                action_reasoning: act_reason,
                action: AgentAction::new(ActionKind::ALL[kind], reps),
                updated_history: hist,
                fallback: false,
            };
            prop_assert_eq!(parse_decision(&render_decision(&d)).unwrap(), d);
        }
    }
}
