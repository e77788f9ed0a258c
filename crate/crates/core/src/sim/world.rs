use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::WorldPoint;

pub const COLORS: &[&str] = &[
    "red", "blue", "green", "white", "gray", "yellow", "orange", "black", "brown", "silver",
];
pub const MATERIALS: &[&str] = &[
    "brick", "glass", "steel", "stone", "wooden", "concrete", "copper", "marble",
];
pub const CATEGORIES: &[&str] = &[
    "tower",
    "bridge",
    "dome",
    "warehouse",
    "chimney",
    "fountain",
    "stadium",
    "antenna",
    "billboard",
    "silo",
    "crane",
    "pagoda",
    "lighthouse",
    "greenhouse",
];

/// Every `color material category` description, in a fixed order.
pub fn vocabulary() -> Vec<(String, &'static str)> {
    let mut out = Vec::with_capacity(COLORS.len() * MATERIALS.len() * CATEGORIES.len());
    for cat in CATEGORIES {
        for mat in MATERIALS {
            for col in COLORS {
                out.push((format!("{col} {mat} {cat}"), *cat));
            }
        }
    }
    out
}

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: WorldPoint,
    pub max: WorldPoint,
}

impl Bounds {
    pub fn new(min: WorldPoint, max: WorldPoint) -> Result<Self, SimError> {
        if !(min.is_finite() && max.is_finite())
            || min.x >= max.x
            || min.y >= max.y
            || min.z > max.z
        {
            return Err(SimError::InvalidParams(format!(
                "empty bounds {min} .. {max}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &WorldPoint) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn depth(&self) -> f64 {
        self.max.y - self.min.y
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> WorldPoint {
        let z = if self.max.z > self.min.z {
            rng.random_range(self.min.z..=self.max.z)
        } else {
            self.min.z
        };
        WorldPoint::new(
            rng.random_range(self.min.x..=self.max.x),
            rng.random_range(self.min.y..=self.max.y),
            z,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldLandmark {
    pub description: String,
    pub position: WorldPoint,
    pub category: String,
}

/// A description placed exactly `count` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDistractor {
    pub description: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    /// Distinct descriptions drawn from the vocabulary.
    pub landmark_count: usize,
    pub bounds: Bounds,
    /// Minimum horizontal distance between any two landmarks, meters.
    pub min_spacing: f64,
    /// Extra instances placed for every drawn description.
    pub distractors: usize,
    pub named_distractors: Vec<NamedDistractor>,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            landmark_count: 20,
            bounds: Bounds {
                min: WorldPoint::new(0.0, 0.0, 0.0),
                max: WorldPoint::new(600.0, 600.0, 30.0),
            },
            min_spacing: 30.0,
            distractors: 0,
            named_distractors: Vec::new(),
        }
    }
}

impl WorldParams {
    pub fn total_landmarks(&self) -> usize {
        self.landmark_count * (1 + self.distractors)
            + self
                .named_distractors
                .iter()
                .map(|d| d.count)
                .sum::<usize>()
    }

    fn validate(&self) -> Result<(), SimError> {
        Bounds::new(self.bounds.min, self.bounds.max)?;
        if self.total_landmarks() == 0 {
            return Err(SimError::InvalidParams(
                "landmark count must be at least 1".into(),
            ));
        }
        if self.landmark_count > vocabulary().len() {
            return Err(SimError::InvalidParams(format!(
                "at most {} distinct descriptions available",
                vocabulary().len()
            )));
        }
        if !(self.min_spacing.is_finite() && self.min_spacing >= 0.0) {
            return Err(SimError::InvalidParams(
                "min spacing must be non-negative".into(),
            ));
        }
        if let Some(d) = self
            .named_distractors
            .iter()
            .find(|d| d.description.trim().is_empty())
        {
            return Err(SimError::InvalidParams(format!(
                "empty distractor description ({} copies)",
                d.count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub seed: u64,
    pub bounds: Bounds,
    pub landmarks: Vec<WorldLandmark>,
}

impl World {
    /// Landmarks sharing `description`.
    pub fn instances<'a>(
        &'a self,
        description: &'a str,
    ) -> impl Iterator<Item = &'a WorldLandmark> + 'a {
        self.landmarks
            .iter()
            .filter(move |l| l.description == description)
    }

    /// Distinct descriptions in first-appearance order.
    pub fn descriptions(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for l in &self.landmarks {
            if !seen.contains(&l.description.as_str()) {
                seen.push(l.description.as_str());
            }
        }
        seen
    }
}

const PLACEMENT_ATTEMPTS: usize = 2000;
/// Densest packing of discs in the plane.
const HEX_PACKING: f64 = 0.9069;

/// Places landmarks by seeded rejection sampling.
pub fn generate_world(seed: u64, params: &WorldParams) -> Result<World, SimError> {
    params.validate()?;
    let total = params.total_landmarks();
    let s = params.min_spacing;
    if s > 0.0 {
        let disc = std::f64::consts::PI * s * s / 4.0;
        let area = (params.bounds.width() + s) * (params.bounds.depth() + s);
        let capacity = (HEX_PACKING * area / disc).floor() as usize;
        if total > capacity.max(1) {
            return Err(SimError::InfeasibleDensity {
                count: total,
                spacing: s,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = vocabulary();
    vocab.shuffle(&mut rng);
    let mut wanted: Vec<(String, String)> = Vec::with_capacity(total);
    for (desc, cat) in vocab.into_iter().take(params.landmark_count) {
        for _ in 0..=params.distractors {
            wanted.push((desc.clone(), cat.to_string()));
        }
    }
    for d in &params.named_distractors {
        let cat = d
            .description
            .split_whitespace()
            .last()
            .unwrap_or("landmark")
            .to_string();
        for _ in 0..d.count {
            wanted.push((d.description.clone(), cat.clone()));
        }
    }

    let mut landmarks: Vec<WorldLandmark> = Vec::with_capacity(total);
    for (description, category) in wanted {
        let position = (0..PLACEMENT_ATTEMPTS)
            .map(|_| params.bounds.sample(&mut rng))
            .find(|p| {
                landmarks
                    .iter()
                    .all(|l| l.position.horizontal_distance(p) >= s)
            })
            .ok_or(SimError::InfeasibleDensity {
                count: total,
                spacing: s,
            })?;
        landmarks.push(WorldLandmark {
            description,
            position,
            category,
        });
    }
    Ok(World {
        seed,
        bounds: params.bounds,
        landmarks,
    })
}
