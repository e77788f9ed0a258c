//! Coordinate-frame math shared by the knowledge base, the graph builder and
//! the simulator.
//!
//! World frame is right-handed with `z` up. Angles cross module boundaries in
//! degrees, lengths in meters. A positive horizontal angle is a
//! counterclockwise rotation seen from above, which this crate calls a left
//! turn.

use std::fmt;
use std::ops::{Add, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance below which two points are treated as coincident.
pub const DEGENERATE_TOLERANCE: f64 = 1e-9;
/// Vertical change below which a move is reported as level.
pub const LEVEL_TOLERANCE: f64 = 0.01;
/// Default outlier cut for depth aggregation, in standard deviations.
pub const DEFAULT_SIGMA_MULT: f64 = 2.0;

const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("empty depth patch")]
    EmptyDepthPatch,
    #[error("depth samples must be finite and positive, got {0}")]
    InvalidDepthSample(f64),
    #[error("sigma multiplier must be positive, got {0}")]
    InvalidSigmaMultiplier(f64),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("intrinsic matrix is singular")]
    SingularIntrinsics,
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("degenerate heading")]
    DegenerateHeading,
    #[error("no horizontal heading")]
    NoHorizontalHeading,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A point in the world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const ORIGIN: WorldPoint = WorldPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        (*other - *self).norm()
    }

    pub fn horizontal_distance(&self, other: &WorldPoint) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// Point reached by moving `length` along `direction`.
    pub fn offset(&self, direction: &Displacement, length: f64) -> WorldPoint {
        WorldPoint::new(
            self.x + direction.x * length,
            self.y + direction.y * length,
            self.z + direction.z * length,
        )
    }
}

impl fmt::Display for WorldPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.2}, {:.2}, {:.2})", self.x, self.y, self.z)
    }
}

/// Difference of two world points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Displacement {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn horizontal_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }
}

impl Sub for WorldPoint {
    type Output = Displacement;

    fn sub(self, rhs: WorldPoint) -> Displacement {
        Displacement {
            x: self.x - rhs.x,
            y: self.y - rhs.y,
            z: self.z - rhs.z,
        }
    }
}

impl Add<Displacement> for WorldPoint {
    type Output = WorldPoint;

    fn add(self, rhs: Displacement) -> WorldPoint {
        WorldPoint::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

/// A direction with unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVector", into = "RawVector")]
pub struct UnitVector3 {
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Serialize, Deserialize)]
struct RawVector {
    x: f64,
    y: f64,
    z: f64,
}

impl TryFrom<RawVector> for UnitVector3 {
    type Error = GeometryError;

    fn try_from(raw: RawVector) -> Result<Self, Self::Error> {
        UnitVector3::normalize(raw.x, raw.y, raw.z)
    }
}

impl From<UnitVector3> for RawVector {
    fn from(v: UnitVector3) -> Self {
        RawVector {
            x: v.x,
            y: v.y,
            z: v.z,
        }
    }
}

impl UnitVector3 {
    pub const X: UnitVector3 = UnitVector3 {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const Y: UnitVector3 = UnitVector3 {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const Z: UnitVector3 = UnitVector3 {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    /// Normalizes `(x, y, z)`; fails on a zero or non-finite vector.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let norm = (x * x + y * y + z * z).sqrt();
        if norm <= DEGENERATE_TOLERANCE {
            return Err(GeometryError::DegenerateHeading);
        }
        if norm == 1.0 {
            return Ok(Self { x, y, z });
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Horizontal unit vector at `degrees` counterclockwise from +x.
    pub fn from_yaw_degrees(degrees: f64) -> Self {
        let (s, c) = sin_cos_degrees(degrees);
        Self { x: c, y: s, z: 0.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Yaw of the horizontal projection, degrees in (-180, 180].
    pub fn yaw_degrees(&self) -> f64 {
        wrap_degrees(self.y.atan2(self.x).to_degrees())
    }

    pub fn dot(&self, d: &Displacement) -> f64 {
        self.x * d.x + self.y * d.y + self.z * d.z
    }

    /// Rotation about the world z axis by `degrees` (counterclockwise).
    pub fn rotated_about_z(&self, degrees: f64) -> Self {
        let (s, c) = sin_cos_degrees(degrees);
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
            z: self.z,
        }
    }

    pub fn as_displacement(&self) -> Displacement {
        Displacement {
            x: self.x,
            y: self.y,
            z: self.z,
        }
    }
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_degrees(degrees: f64) -> (f64, f64) {
    let reduced = degrees.rem_euclid(360.0);
    if reduced == 0.0 {
        (0.0, 1.0)
    } else if reduced == 90.0 {
        (1.0, 0.0)
    } else if reduced == 180.0 {
        (0.0, -1.0)
    } else if reduced == 270.0 {
        (-1.0, 0.0)
    } else {
        reduced.to_radians().sin_cos()
    }
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_degrees(degrees: f64) -> f64 {
    let mut a = degrees.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    if a <= -180.0 {
        a += 360.0;
    }
    a
}

/// Pixel coordinate, `u` horizontal and `v` vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: PixelCoord,
    pub max: PixelCoord,
    pub confidence: f64,
}

impl BoundingBox {
    pub fn new(min: PixelCoord, max: PixelCoord, confidence: f64) -> Result<Self, GeometryError> {
        let finite = [min.u, min.v, max.u, max.v, confidence]
            .iter()
            .all(|c| c.is_finite());
        if !finite {
            return Err(GeometryError::NonFinite);
        }
        if min.u > max.u || min.v > max.v {
            return Err(GeometryError::InvalidCamera(
                "bounding box min corner exceeds max corner".into(),
            ));
        }
        Ok(Self {
            min,
            max,
            confidence,
        })
    }

    pub fn center(&self) -> PixelCoord {
        PixelCoord::new(
            0.5 * (self.min.u + self.max.u),
            0.5 * (self.min.v + self.max.v),
        )
    }
}

/// Depth samples (meters) read from inside a bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthPatch {
    samples: Vec<f64>,
}

impl DepthPatch {
    pub fn new(samples: Vec<f64>) -> Result<Self, GeometryError> {
        if samples.is_empty() {
            return Err(GeometryError::EmptyDepthPatch);
        }
        if let Some(&bad) = samples.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(GeometryError::InvalidDepthSample(bad));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Mean depth after discarding samples strictly beyond `sigma_mult`
/// (population) standard deviations from the raw mean.
pub fn aggregate_depth(patch: &DepthPatch, sigma_mult: f64) -> Result<f64, GeometryError> {
    if !(sigma_mult.is_finite() && sigma_mult > 0.0) {
        return Err(GeometryError::InvalidSigmaMultiplier(sigma_mult));
    }
    let samples = patch.samples();
    if samples.is_empty() {
        return Err(GeometryError::EmptyDepthPatch);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let sigma = variance.sqrt();
    let cut = sigma_mult * sigma;

    let (sum, count) = samples
        .iter()
        .filter(|s| (*s - mean).abs() <= cut)
        .fold((0.0, 0usize), |(sum, count), s| (sum + s, count + 1));
    if count == 0 {
        return Ok(mean);
    }
    Ok(sum / count as f64)
}

/// Pinhole camera with intrinsics `k`, camera-to-world rotation `r` and
/// camera center `t` in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    k: Matrix3<f64>,
    k_inv: Matrix3<f64>,
    r: Matrix3<f64>,
    t: Vector3<f64>,
}

impl CameraModel {
    pub fn new(k: Matrix3<f64>, r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self, GeometryError> {
        if k.iter()
            .chain(r.iter())
            .chain(t.iter())
            .any(|v| !v.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        if (k[(2, 2)] - 1.0).abs() > 1e-12 {
            return Err(GeometryError::InvalidCamera(format!(
                "intrinsics must have K[2][2] = 1, got {}",
                k[(2, 2)]
            )));
        }
        let k_inv = k.try_inverse().ok_or(GeometryError::SingularIntrinsics)?;
        let orthogonality = (r.transpose() * r - Matrix3::identity()).abs().max();
        if orthogonality > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation is not orthonormal (max deviation {orthogonality:e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation determinant must be +1, got {det}"
            )));
        }
        Ok(Self { k, k_inv, r, t })
    }

    /// Square-pixel intrinsics from focal length and principal point.
    pub fn intrinsics(fx: f64, fy: f64, cx: f64, cy: f64) -> Matrix3<f64> {
        Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0)
    }

    pub fn k(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.t
    }

    /// Back-projects `pixel` at Euclidean camera-to-point distance `depth`.
    pub fn pixel_to_world(
        &self,
        pixel: PixelCoord,
        depth: f64,
    ) -> Result<WorldPoint, GeometryError> {
        pixel_to_world(self, pixel, depth)
    }
}

/// Back-projection `depth / |K⁻¹p| · R K⁻¹ p + T` with `p = [u, v, 1]`.
///
/// `depth` is the Euclidean distance from the camera center to the point,
/// not the z-depth along the optical axis.
pub fn pixel_to_world(
    camera: &CameraModel,
    pixel: PixelCoord,
    depth: f64,
) -> Result<WorldPoint, GeometryError> {
    if !(pixel.u.is_finite() && pixel.v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if !(depth.is_finite() && depth > 0.0) {
        return Err(GeometryError::NonPositiveDepth(depth));
    }
    let homogeneous = Vector3::new(pixel.u, pixel.v, 1.0);
    let ray = camera.k_inv * homogeneous;
    let ray_norm = ray.norm();
    if ray_norm == 0.0 {
        return Err(GeometryError::SingularIntrinsics);
    }
    let world = (depth / ray_norm) * (camera.r * ray) + camera.t;
    Ok(WorldPoint::from_vector(&world))
}

/// Localizes a detection: the box center back-projected at the outlier-robust
/// mean depth of the patch.
pub fn localize_detection(
    camera: &CameraModel,
    bbox: &BoundingBox,
    patch: &DepthPatch,
) -> Result<WorldPoint, GeometryError> {
    let depth = aggregate_depth(patch, DEFAULT_SIGMA_MULT)?;
    pixel_to_world(camera, bbox.center(), depth)
}

/// Unit direction from `from` to `to`.
pub fn heading_between(from: &WorldPoint, to: &WorldPoint) -> Result<UnitVector3, GeometryError> {
    let d = *to - *from;
    let norm = d.norm();
    if !norm.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if norm <= DEGENERATE_TOLERANCE {
        return Err(GeometryError::DegenerateHeading);
    }
    Ok(UnitVector3 {
        x: d.x / norm,
        y: d.y / norm,
        z: d.z / norm,
    })
}

/// Signed angle from `v1` to `v2` between their xy projections, degrees in
/// (-180, 180]. Positive is counterclockwise (left).
pub fn horizontal_angle(v1: &UnitVector3, v2: &UnitVector3) -> Result<f64, GeometryError> {
    signed_xy_angle(v1.x, v1.y, v2.x, v2.y)
}

fn signed_xy_angle(ax: f64, ay: f64, bx: f64, by: f64) -> Result<f64, GeometryError> {
    if (ax * ax + ay * ay).sqrt() <= DEGENERATE_TOLERANCE
        || (bx * bx + by * by).sqrt() <= DEGENERATE_TOLERANCE
    {
        return Err(GeometryError::NoHorizontalHeading);
    }
    let cross_z = ax * by - ay * bx;
    let dot_xy = ax * bx + ay * by;
    let degrees = cross_z.atan2(dot_xy).to_degrees();
    Ok(if degrees <= -180.0 { 180.0 } else { degrees })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElevationSign {
    Ascend,
    Descend,
    Level,
}

/// Egocentric description of one move: turn, vertical change, horizontal
/// distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeMotion {
    /// Signed degrees in (-180, 180], positive = left.
    pub theta: f64,
    /// Absolute vertical change, meters.
    pub elevation: f64,
    pub elevation_sign: ElevationSign,
    /// Horizontal distance, meters.
    pub distance: f64,
}

impl RelativeMotion {
    pub fn is_valid(&self) -> bool {
        self.theta > -180.0
            && self.theta <= 180.0
            && self.elevation >= 0.0
            && self.distance >= 0.0
            && self.elevation.is_finite()
            && self.distance.is_finite()
    }
}

/// Motion from `cur` to `next` for an agent currently facing `orientation`.
pub fn motion_from_orientation(
    orientation: &UnitVector3,
    cur: &WorldPoint,
    next: &WorldPoint,
) -> Result<RelativeMotion, GeometryError> {
    let outgoing = heading_between(cur, next)?;
    let theta = horizontal_angle(orientation, &outgoing)?;
    let d = *next - *cur;
    let elevation_sign = if d.z.abs() < LEVEL_TOLERANCE {
        ElevationSign::Level
    } else if d.z > 0.0 {
        ElevationSign::Ascend
    } else {
        ElevationSign::Descend
    };
    Ok(RelativeMotion {
        theta,
        elevation: d.z.abs(),
        elevation_sign,
        distance: d.horizontal_norm(),
    })
}

/// Turn, elevation and distance for `cur → next`, with the orientation
/// induced by the preceding segment `prev → cur`.
pub fn relative_motion(
    prev: &WorldPoint,
    cur: &WorldPoint,
    next: &WorldPoint,
) -> Result<RelativeMotion, GeometryError> {
    let incoming = heading_between(prev, cur)?;
    motion_from_orientation(&incoming, cur, next)
}
