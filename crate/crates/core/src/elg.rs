//! Layered candidate graph over the next unvisited landmarks.
//!
//! Layer 0 holds the agent. Layer `i` holds candidate positions of the
//! `i`-th unvisited landmark. Only nearby candidates are linked: the
//! `n_next` closest to the agent enter layer 1, and each node links to its
//! `n_subseq` closest candidates in the following layer. Turn angles depend
//! on the incoming segment, so they are computed per path in
//! [`enumerate_paths`] rather than stored on edges.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    horizontal_angle, ElevationSign, GeometryError, RelativeMotion, UnitVector3, WorldPoint,
    DEGENERATE_TOLERANCE, LEVEL_TOLERANCE,
};
use crate::slkb::RetrievedLandmarkSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElgError {
    #[error("no unvisited landmarks to build a graph from")]
    NoLandmarks,
    #[error("no candidates for landmark {0}")]
    NoCandidates(String),
    #[error("invalid graph config: {0}")]
    InvalidConfig(String),
    #[error("invalid agent pose: {0}")]
    InvalidPose(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElgConfig {
    pub n_ahead: usize,
    pub n_next: usize,
    pub n_subseq: usize,
}

impl Default for ElgConfig {
    fn default() -> Self {
        Self {
            n_ahead: 2,
            n_next: 6,
            n_subseq: 2,
        }
    }
}

impl ElgConfig {
    pub fn validate(&self) -> Result<(), ElgError> {
        for (name, v) in [
            ("n_ahead", self.n_ahead),
            ("n_next", self.n_next),
            ("n_subseq", self.n_subseq),
        ] {
            if v == 0 {
                return Err(ElgError::InvalidConfig(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        Ok(())
    }

    /// Upper bound on the number of paths through a graph with `layers`
    /// landmark layers.
    pub fn max_paths(&self, layers: usize) -> usize {
        if layers == 0 {
            return 0;
        }
        self.n_next
            .saturating_mul(self.n_subseq.saturating_pow(layers as u32 - 1))
    }
}

/// Agent position and facing direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub position: WorldPoint,
    pub heading: UnitVector3,
}

impl AgentPose {
    /// Rejects headings without a horizontal component.
    pub fn new(position: WorldPoint, heading: UnitVector3) -> Result<Self, GeometryError> {
        if !position.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if heading.x().hypot(heading.y()) <= DEGENERATE_TOLERANCE {
            return Err(GeometryError::NoHorizontalHeading);
        }
        Ok(Self { position, heading })
    }

    pub fn from_yaw(position: WorldPoint, yaw_degrees: f64) -> Self {
        Self {
            position,
            heading: UnitVector3::from_yaw_degrees(yaw_degrees),
        }
    }

    pub fn yaw_degrees(&self) -> f64 {
        self.heading.yaw_degrees()
    }
}

/// One landmark still to be visited, with every retrieved candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnvisitedLandmark {
    /// Knowledge-base description used as the layer name.
    pub name: String,
    /// Phrase as it appeared in the instruction.
    pub instruction_landmark: String,
    pub candidates: Vec<WorldPoint>,
}

/// The next `n_ahead` landmarks after the first `visited_count`.
pub fn select_unvisited(
    retrieved: &RetrievedLandmarkSet,
    visited_count: usize,
    n_ahead: usize,
) -> Vec<UnvisitedLandmark> {
    retrieved
        .iter()
        .skip(visited_count)
        .take(n_ahead)
        .map(|r| UnvisitedLandmark {
            name: r.matched_description.clone(),
            instruction_landmark: r.instruction_landmark.clone(),
            candidates: r.positions.clone(),
        })
        .collect()
}

/// `(layer, candidate index)`; the anchor is `(0, 0)`. Ordering is
/// lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub layer: usize,
    pub index: usize,
}

impl NodeId {
    pub const ANCHOR: NodeId = NodeId { layer: 0, index: 0 };
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.layer, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElgNode {
    pub id: NodeId,
    /// Empty for the anchor.
    pub landmark: String,
    pub position: WorldPoint,
}

impl ElgNode {
    pub fn layer(&self) -> usize {
        self.id.layer
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElgEdge {
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elg {
    nodes: Vec<ElgNode>,
    edges: Vec<ElgEdge>,
    landmarks: Vec<String>,
}

impl Elg {
    /// Nodes sorted by id, anchor first.
    pub fn nodes(&self) -> &[ElgNode] {
        &self.nodes
    }

    /// Edges sorted by `(from, to)`.
    pub fn edges(&self) -> &[ElgEdge] {
        &self.edges
    }

    /// Landmark name of each layer beyond the anchor.
    pub fn landmarks(&self) -> &[String] {
        &self.landmarks
    }

    /// Number of landmark layers.
    pub fn layers(&self) -> usize {
        self.landmarks.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&ElgNode> {
        self.nodes
            .binary_search_by(|n| n.id.cmp(&id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn layer_nodes(&self, layer: usize) -> impl Iterator<Item = &ElgNode> {
        self.nodes.iter().filter(move |n| n.id.layer == layer)
    }

    pub fn successors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let start = self.edges.partition_point(|e| e.from < id);
        self.edges[start..]
            .iter()
            .take_while(move |e| e.from == id)
            .map(|e| e.to)
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.successors(id).count()
    }
}

/// Indices of the `k` points closest to `origin`, closest first; equal
/// distances go to the smaller index.
fn nearest(origin: &WorldPoint, points: &[WorldPoint], k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (origin.distance(p), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Builds the pruned graph for `unvisited` (at most `config.n_ahead` layers
/// are used).
pub fn build(
    pose: &AgentPose,
    unvisited: &[UnvisitedLandmark],
    config: &ElgConfig,
) -> Result<Elg, ElgError> {
    config.validate()?;
    AgentPose::new(pose.position, pose.heading)?;
    let window = &unvisited[..unvisited.len().min(config.n_ahead)];
    if window.is_empty() {
        return Err(ElgError::NoLandmarks);
    }
    if let Some(empty) = window.iter().find(|l| l.candidates.is_empty()) {
        return Err(ElgError::NoCandidates(empty.name.clone()));
    }

    let mut nodes: BTreeMap<NodeId, ElgNode> = BTreeMap::new();
    let mut edges = Vec::new();
    nodes.insert(
        NodeId::ANCHOR,
        ElgNode {
            id: NodeId::ANCHOR,
            landmark: String::new(),
            position: pose.position,
        },
    );
    let mut frontier = vec![NodeId::ANCHOR];
    for (i, landmark) in window.iter().enumerate() {
        let layer = i + 1;
        let mut next_frontier = Vec::new();
        for &from in &frontier {
            let origin = nodes[&from].position;
            let k = if from.layer == 0 {
                config.n_next
            } else {
                config.n_subseq
            };
            for index in nearest(&origin, &landmark.candidates, k) {
                let to = NodeId { layer, index };
                edges.push(ElgEdge { from, to });
                nodes.entry(to).or_insert_with(|| {
                    next_frontier.push(to);
                    ElgNode {
                        id: to,
                        landmark: landmark.name.clone(),
                        position: landmark.candidates[index],
                    }
                });
            }
        }
        next_frontier.sort();
        frontier = next_frontier;
    }
    edges.sort_by_key(|e| (e.from, e.to));
    Ok(Elg {
        nodes: nodes.into_values().collect(),
        edges,
        landmarks: window.iter().map(|l| l.name.clone()).collect(),
    })
}

/// One anchor-to-leaf path with its step motions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElgPath {
    /// Node ids from layer 1 onward.
    pub nodes: Vec<NodeId>,
    pub positions: Vec<WorldPoint>,
    pub landmarks: Vec<String>,
    pub motions: Vec<RelativeMotion>,
    /// True when the path stops before the last layer.
    pub partial: bool,
}

impl ElgPath {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Motion from `cur` to `next` given the current facing, plus the facing
/// after the move. Purely vertical moves keep the facing and report no turn.
pub fn step_motion(
    facing: &UnitVector3,
    cur: &WorldPoint,
    next: &WorldPoint,
) -> (RelativeMotion, UnitVector3) {
    let d = *next - *cur;
    let elevation_sign = if d.z.abs() < LEVEL_TOLERANCE {
        ElevationSign::Level
    } else if d.z > 0.0 {
        ElevationSign::Ascend
    } else {
        ElevationSign::Descend
    };
    let distance = d.horizontal_norm();
    let (theta, facing) = match UnitVector3::normalize(d.x, d.y, 0.0) {
        Ok(flat) if distance > DEGENERATE_TOLERANCE => {
            (horizontal_angle(facing, &flat).unwrap_or(0.0), flat)
        }
        _ => (0.0, *facing),
    };
    let motion = RelativeMotion {
        theta,
        elevation: d.z.abs(),
        elevation_sign,
        distance,
    };
    (motion, facing)
}

/// Every path from the anchor, in lexicographic node-id order. Dead ends
/// before the last layer are returned as partial paths.
pub fn enumerate_paths(elg: &Elg, pose: &AgentPose) -> Vec<ElgPath> {
    let mut out = Vec::new();
    let mut stack: Vec<NodeId> = Vec::new();
    walk(elg, pose, NodeId::ANCHOR, &mut stack, &mut out);
    out
}

fn walk(elg: &Elg, pose: &AgentPose, at: NodeId, stack: &mut Vec<NodeId>, out: &mut Vec<ElgPath>) {
    let mut any = false;
    for next in elg.successors(at).collect::<Vec<_>>() {
        any = true;
        stack.push(next);
        walk(elg, pose, next, stack, out);
        stack.pop();
    }
    if !any && !stack.is_empty() {
        out.push(materialize(elg, pose, stack));
    }
}

fn materialize(elg: &Elg, pose: &AgentPose, ids: &[NodeId]) -> ElgPath {
    let mut facing = pose.heading;
    let mut cur = pose.position;
    let mut positions = Vec::with_capacity(ids.len());
    let mut landmarks = Vec::with_capacity(ids.len());
    let mut motions = Vec::with_capacity(ids.len());
    for id in ids {
        let node = elg.node(*id).expect("edge targets exist");
        let (motion, next_facing) = step_motion(&facing, &cur, &node.position);
        motions.push(motion);
        positions.push(node.position);
        landmarks.push(node.landmark.clone());
        facing = next_facing;
        cur = node.position;
    }
    ElgPath {
        nodes: ids.to_vec(),
        positions,
        landmarks,
        motions,
        partial: ids.len() < elg.layers(),
    }
}

/// JSON document for inspection: nodes, edges and enumerated paths.
pub fn debug_export(elg: &Elg, paths: &[ElgPath]) -> serde_json::Value {
    serde_json::json!({
        "nodes": elg.nodes,
        "edges": elg.edges,
        "paths": paths,
    })
}
