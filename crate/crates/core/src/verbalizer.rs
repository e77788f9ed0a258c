//! Instruction-like text for graph paths.
//!
//! The first step of a path uses the detailed template, later steps the
//! coarse one:
//!
//! ```text
//! Turn left 30 degrees, move forward 10 meters and descend 4 meters to reach the intersection
//! turn right 45 degrees and move toward the bridge
//! ```

use serde::{Deserialize, Serialize};

use crate::elg::ElgPath;
use crate::geometry::{ElevationSign, RelativeMotion, WorldPoint};

/// Turns smaller than this are not mentioned.
pub const MIN_TURN_DEGREES: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub landmark: String,
    pub motion: RelativeMotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDescription {
    pub path_id: usize,
    pub text: String,
    pub steps: Vec<PathStep>,
    /// Candidate position reached by each step.
    pub waypoints: Vec<WorldPoint>,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathDescriptionSet(pub Vec<PathDescription>);

impl PathDescriptionSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PathDescription> {
        self.0.iter()
    }

    pub fn get(&self, id: usize) -> Option<&PathDescription> {
        self.0.get(id)
    }
}

fn rounded(value: f64) -> i64 {
    value.round() as i64
}

fn turn_clause(theta: f64) -> Option<String> {
    if theta.abs() < MIN_TURN_DEGREES {
        return None;
    }
    let side = if theta > 0.0 { "left" } else { "right" };
    Some(format!("Turn {side} {} degrees", rounded(theta.abs())))
}

fn elevation_clause(motion: &RelativeMotion) -> Option<String> {
    let verb = match motion.elevation_sign {
        ElevationSign::Level => return None,
        ElevationSign::Ascend => "ascend",
        ElevationSign::Descend => "descend",
    };
    let meters = rounded(motion.elevation);
    (meters != 0).then(|| format!("{verb} {meters} meters"))
}

/// Prefixes "the " unless `landmark` already starts with an article.
pub fn definite(landmark: &str) -> String {
    let lower = landmark.to_lowercase();
    if ["the ", "a ", "an "].iter().any(|a| lower.starts_with(a)) {
        landmark.to_string()
    } else {
        format!("the {landmark}")
    }
}

/// One step as a sentence. The detailed form inserts `landmark` verbatim;
/// the coarse form reads "toward the {landmark}", collapsing a doubled
/// article.
pub fn describe_step(motion: &RelativeMotion, landmark: &str, detailed: bool) -> String {
    let turn = turn_clause(motion.theta);
    if detailed {
        let mut movement = format!("move forward {} meters", rounded(motion.distance));
        if let Some(elev) = elevation_clause(motion) {
            movement.push_str(" and ");
            movement.push_str(&elev);
        }
        match turn {
            Some(t) => format!("{t}, {movement} to reach {landmark}."),
            None => format!("{} to reach {landmark}.", capitalize(&movement)),
        }
    } else {
        let target = definite(landmark);
        match turn {
            Some(t) => format!("{t} and move toward {target}."),
            None => format!("Move toward {target}."),
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn decapitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Joins per-step sentences: detailed first, coarse after, separated by
/// ", then ".
pub fn describe_steps(steps: &[PathStep]) -> String {
    let fragments: Vec<String> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let sentence = describe_step(&s.motion, &s.landmark, i == 0);
            let fragment = sentence.trim_end_matches('.').to_string();
            if i == 0 {
                fragment
            } else {
                decapitalize(&fragment)
            }
        })
        .collect();
    if fragments.is_empty() {
        String::new()
    } else {
        format!("{}.", fragments.join(", then "))
    }
}

/// One description per path, ids in input order.
pub fn describe_paths(paths: &[ElgPath]) -> PathDescriptionSet {
    PathDescriptionSet(
        paths
            .iter()
            .enumerate()
            .map(|(path_id, p)| {
                let steps: Vec<PathStep> = p
                    .landmarks
                    .iter()
                    .zip(&p.motions)
                    .map(|(l, m)| PathStep {
                        landmark: definite(l),
                        motion: *m,
                    })
                    .collect();
                PathDescription {
                    path_id,
                    text: describe_steps(&steps),
                    steps,
                    waypoints: p.positions.clone(),
                    partial: p.partial,
                }
            })
            .collect(),
    )
}
