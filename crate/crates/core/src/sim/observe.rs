use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::World;
use crate::agent::{ObservationBundle, View, ViewContent};
use crate::elg::AgentPose;
use crate::geometry::{horizontal_angle, UnitVector3, WorldPoint};
use crate::slkb::LandmarkRecord;

/// Elevation angle beyond which a landmark belongs to the top or bottom view.
pub const VERTICAL_VIEW_ELEVATION: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObserveParams {
    /// Maximum 3D distance, meters.
    pub range: f64,
    /// Field of view of each camera, degrees.
    pub fov: f64,
    /// Standard deviation of per-axis position jitter, meters.
    pub sigma_pos: f64,
    /// Probability that a visible landmark is missed.
    pub p_drop: f64,
}

impl Default for ObserveParams {
    fn default() -> Self {
        Self {
            range: 100.0,
            fov: 180.0,
            sigma_pos: 0.0,
            p_drop: 0.0,
        }
    }
}

impl ObserveParams {
    pub fn validate(&self) -> Result<(), super::SimError> {
        let bad = |m: &str| Err(super::SimError::InvalidParams(m.to_string()));
        if !(self.range.is_finite() && self.range > 0.0) {
            return bad("observation range must be positive");
        }
        if !(self.fov > 0.0 && self.fov <= 180.0) {
            return bad("field of view must lie in (0, 180]");
        }
        if !(self.sigma_pos.is_finite() && self.sigma_pos >= 0.0) {
            return bad("position noise must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.p_drop) {
            return bad("drop probability must lie in [0, 1]");
        }
        Ok(())
    }
}

/// View containing `target` seen from `pose`, and the angle between the
/// target direction and that view's axis. `None` when the target coincides
/// with the pose.
pub fn view_for(pose: &AgentPose, target: &WorldPoint) -> Option<(View, f64)> {
    let d = *target - pose.position;
    let dir = UnitVector3::normalize(d.x, d.y, d.z).ok()?;
    let elevation = d.z.atan2(d.horizontal_norm()).to_degrees();
    if elevation > VERTICAL_VIEW_ELEVATION {
        return Some((View::Top, 90.0 - elevation));
    }
    if elevation < -VERTICAL_VIEW_ELEVATION {
        return Some((View::Bottom, 90.0 + elevation));
    }
    let flat = UnitVector3::normalize(d.x, d.y, 0.0).ok()?;
    let bearing = horizontal_angle(&pose.heading, &flat).ok()?;
    let (view, axis_offset) = if bearing.abs() <= 45.0 {
        (View::Front, 0.0)
    } else if bearing > 45.0 && bearing <= 135.0 {
        (View::Left, 90.0)
    } else if (-135.0..-45.0).contains(&bearing) {
        (View::Right, -90.0)
    } else {
        (View::Back, 180.0)
    };
    let axis = pose.heading.rotated_about_z(axis_offset);
    let cos = (axis.x() * dir.x() + axis.y() * dir.y() + axis.z() * dir.z()).clamp(-1.0, 1.0);
    Some((view, cos.acos().to_degrees()))
}

/// Per-view landmark summaries and localized records for everything in
/// range and inside its view's field of view.
pub fn observe<R: Rng>(
    world: &World,
    pose: &AgentPose,
    params: &ObserveParams,
    rng: &mut R,
) -> (ObservationBundle, Vec<LandmarkRecord>) {
    let jitter = Normal::new(0.0, params.sigma_pos)
        .ok()
        .filter(|_| params.sigma_pos > 0.0);
    let mut per_view: Vec<Vec<(f64, String)>> = vec![Vec::new(); View::ALL.len()];
    let mut records = Vec::new();
    for l in &world.landmarks {
        let dist = pose.position.distance(&l.position);
        if dist > params.range {
            continue;
        }
        let Some((view, offset)) = view_for(pose, &l.position) else {
            continue;
        };
        if offset > params.fov / 2.0 {
            continue;
        }
        if params.p_drop > 0.0 && rng.random_bool(params.p_drop) {
            continue;
        }
        let position = match &jitter {
            Some(n) => WorldPoint::new(
                l.position.x + n.sample(rng),
                l.position.y + n.sample(rng),
                l.position.z + n.sample(rng),
            ),
            None => l.position,
        };
        let slot = View::ALL
            .iter()
            .position(|v| *v == view)
            .expect("known view");
        per_view[slot].push((dist, l.description.clone()));
        records.push(
            LandmarkRecord::new(l.description.clone(), position, 1.0).with_source(view.label()),
        );
    }
    let mut bundle = ObservationBundle::new();
    for (slot, mut seen) in per_view.into_iter().enumerate() {
        seen.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let text = seen
            .iter()
            .map(|(d, desc)| format!("{desc} ({d:.0} m)"))
            .collect::<Vec<_>>()
            .join(", ");
        bundle.set(View::ALL[slot], ViewContent::Text(text));
    }
    (bundle, records)
}
