//! Analytic synthetic scenes with exact ground truth.
//!
//! A scene is an island solid (a footprint shape extruded under a flat or
//! conical height profile) surrounded by a ring of sea points at `z = 0`,
//! imaged by an orbit of cameras looking at a common center. Masks are
//! ray-cast against the solid, and the "reconstruction" is the truth pushed
//! through the inverse of a similarity distortion, so aligning it back to the
//! truth must recover that distortion.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
//! A uniform variate is `(next_u64 >> 11)·2⁻⁵³`; a Gaussian one is
//! `sqrt(−2 ln(1 − u₁))·cos(2π u₂)` from two consecutive uniforms.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Point2, Point3, Quaternion, UnitQuaternion, Vector2, Vector3};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backproject::ViewFrame;
use crate::exec::Execution;
use crate::geom::{apply_sim3_to_points, apply_sim3_to_pose, PointCloud, PoseConvention, RigidPose, Sim3Transform, Trajectory};
use crate::ingest::{IntrinsicsRecord, MaskImage};

/// XOR-ed into the scene seed to derive the trajectory-noise seed.
pub const NOISE_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
/// Island points are colored green, sea points blue.
pub const ISLAND_COLOR: [u8; 3] = [40, 160, 60];
pub const SEA_COLOR: [u8; 3] = [30, 80, 200];
const MAX_RAY_LENGTH: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    SpecInvalid(String),
    #[error("sigma must be non-negative and finite, got {0}")]
    NegativeSigma(f64),
}

fn invalid<T>(message: impl Into<String>) -> Result<T, SynthError> {
    Err(SynthError::SpecInvalid(message.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IslandShape {
    /// Axis-aligned, centered on the origin.
    Rectangle { width: f64, height: f64 },
    /// Centered on the origin.
    Disk { radius: f64 },
    /// Simple polygon in world coordinates, either winding.
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightProfile {
    Flat { height: f64 },
    /// `z = peak·(1 − ρ/R)` with `ρ` the distance to the shape's centroid and
    /// `R` the largest such distance over the shape.
    Cone { peak: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaRing {
    /// Sea points lie at most this far from the island's footprint.
    pub margin: f64,
    /// Lattice spacing; also the minimum gap between sea and island. The gap
    /// grows when needed so that no camera sees a sea point within three
    /// pixels of the island silhouette.
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub radius: f64,
    pub altitude: f64,
    pub frame_count: u32,
    pub look_at: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distortion {
    Identity,
    Fixed {
        scale: f64,
        /// `[w, x, y, z]`; normalized before use.
        rotation: [f64; 4],
        translation: [f64; 3],
    },
    /// Log-uniform scale in `[0.1, 10]`, uniform rotation, translation
    /// uniform in `[−100, 100]³` m, drawn from the scene seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub island_shape: IslandShape,
    pub height_profile: HeightProfile,
    pub point_spacing: f64,
    pub sea_ring: SeaRing,
    pub orbit: Orbit,
    pub intrinsics: IntrinsicsRecord,
    pub distortion: Distortion,
    /// Standard deviation of the noise added to the reference camera centers.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    /// A flat 200 m × 300 m rectangle, 1 m tall, seen by 60 cameras.
    fn default() -> Self {
        Self {
            island_shape: IslandShape::Rectangle { width: 200.0, height: 300.0 },
            height_profile: HeightProfile::Flat { height: 1.0 },
            point_spacing: 0.5,
            sea_ring: SeaRing { margin: 40.0, spacing: 5.0 },
            orbit: Orbit { radius: 450.0, altitude: 350.0, frame_count: 60, look_at: [0.0; 3] },
            intrinsics: IntrinsicsRecord { fx: 700.0, fy: 700.0, cx: 400.0, cy: 300.0, width: 800, height: 600 },
            distortion: Distortion::Random,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn rectangle(width: f64, height: f64) -> Self {
        Self { island_shape: IslandShape::Rectangle { width, height }, ..Self::default() }
    }

    pub fn cone_disk(radius: f64, peak: f64) -> Self {
        Self {
            island_shape: IslandShape::Disk { radius },
            height_profile: HeightProfile::Cone { peak },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive, got {v}"))
            }
        };
        match &self.island_shape {
            IslandShape::Rectangle { width, height } => {
                positive("island_shape.width", *width)?;
                positive("island_shape.height", *height)?;
            }
            IslandShape::Disk { radius } => positive("island_shape.radius", *radius)?,
            IslandShape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return invalid("polygon needs at least 3 vertices");
                }
                if vertices.iter().flatten().any(|v| !v.is_finite()) {
                    return invalid("polygon vertices must be finite");
                }
                if polygon_area(vertices).abs() <= 0.0 {
                    return invalid("polygon has zero area");
                }
            }
        }
        let top = match self.height_profile {
            HeightProfile::Flat { height } => height,
            HeightProfile::Cone { peak } => peak,
        };
        positive("height_profile", top)?;
        positive("point_spacing", self.point_spacing)?;
        positive("sea_ring.spacing", self.sea_ring.spacing)?;
        if !(self.sea_ring.margin >= 0.0 && self.sea_ring.margin.is_finite()) {
            return invalid("sea_ring.margin must be non-negative");
        }
        positive("orbit.radius", self.orbit.radius)?;
        if self.orbit.frame_count < 3 {
            return invalid(format!("orbit.frame_count must be at least 3, got {}", self.orbit.frame_count));
        }
        if self.orbit.look_at.iter().any(|v| !v.is_finite()) {
            return invalid("orbit.look_at must be finite");
        }
        if !(self.orbit.altitude > top + self.orbit.look_at[2].max(0.0) && self.orbit.altitude.is_finite()) {
            return invalid("orbit.altitude must clear the island top");
        }
        self.intrinsics.validate().map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
        if let Distortion::Fixed { scale, rotation, translation } = self.distortion {
            positive("distortion.scale", scale)?;
            let norm = rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) || translation.iter().any(|v| !v.is_finite()) {
                return invalid("distortion rotation and translation must be finite and non-zero");
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return invalid("noise_sigma must be non-negative");
        }
        // Guard against accidentally enormous lattices.
        let (lo, hi) = Solid::new(self).bounds();
        let cells = ((hi.x - lo.x) / self.point_spacing + 1.0) * ((hi.y - lo.y) / self.point_spacing + 1.0);
        if cells > 5e7 {
            return invalid(format!("island lattice of ~{cells:.0} points is too large"));
        }
        Ok(())
    }
}

/// Signed shoelace area (positive for counter-clockwise).
fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>() / 2.0
}

fn polygon_centroid(v: &[[f64; 2]]) -> Point2<f64> {
    let n = v.len();
    let a = polygon_area(v);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    Point2::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Even-odd point-in-polygon.
fn inside_polygon(v: &[[f64; 2]], p: &Point2<f64>) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p.y) != (b[1] > p.y) && p.x < (b[0] - a[0]) * (p.y - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segment_point_distance(a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t - p).norm()
}

fn orient(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b - a).perp(&(c - a))
}

fn segments_cross(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>, d: &Point2<f64>) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    // Touching or collinear overlap.
    let on = |p: &Point2<f64>, q: &Point2<f64>, r: &Point2<f64>| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on(c, d, a)) || (d2 == 0.0 && on(c, d, b)) || (d3 == 0.0 && on(a, b, c)) || (d4 == 0.0 && on(a, b, d))
}

/// The island as a solid: footprint shape × height profile.
#[derive(Debug, Clone)]
struct Solid {
    shape: IslandShape,
    profile: HeightProfile,
    center: Point2<f64>,
    /// Largest distance from `center` to the footprint.
    reach: f64,
}

impl Solid {
    fn new(spec: &SceneSpec) -> Self {
        let (center, reach) = match &spec.island_shape {
            IslandShape::Rectangle { width, height } => (Point2::origin(), (width * width + height * height).sqrt() / 2.0),
            IslandShape::Disk { radius } => (Point2::origin(), *radius),
            IslandShape::Polygon { vertices } => {
                let c = polygon_centroid(vertices);
                let r = vertices.iter().map(|v| (Point2::new(v[0], v[1]) - c).norm()).fold(0.0, f64::max);
                (c, r)
            }
        };
        Self { shape: spec.island_shape.clone(), profile: spec.height_profile, center, reach }
    }

    fn top(&self) -> f64 {
        match self.profile {
            HeightProfile::Flat { height } => height,
            HeightProfile::Cone { peak } => peak,
        }
    }

    fn bounds(&self) -> (Point2<f64>, Point2<f64>) {
        match &self.shape {
            IslandShape::Rectangle { width, height } => {
                (Point2::new(-width / 2.0, -height / 2.0), Point2::new(width / 2.0, height / 2.0))
            }
            IslandShape::Disk { radius } => (Point2::new(-radius, -radius), Point2::new(*radius, *radius)),
            IslandShape::Polygon { vertices } => vertices.iter().fold(
                (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
                |(lo, hi), v| (Point2::new(lo.x.min(v[0]), lo.y.min(v[1])), Point2::new(hi.x.max(v[0]), hi.y.max(v[1]))),
            ),
        }
    }

    fn contains_2d(&self, p: &Point2<f64>) -> bool {
        match &self.shape {
            IslandShape::Rectangle { width, height } => p.x.abs() <= width / 2.0 && p.y.abs() <= height / 2.0,
            IslandShape::Disk { radius } => p.coords.norm_squared() <= radius * radius,
            IslandShape::Polygon { vertices } => inside_polygon(vertices, p),
        }
    }

    /// Euclidean distance from `p` to the footprint (0 inside).
    fn distance_2d(&self, p: &Point2<f64>) -> f64 {
        match &self.shape {
            IslandShape::Rectangle { width, height } => {
                let dx = (p.x.abs() - width / 2.0).max(0.0);
                let dy = (p.y.abs() - height / 2.0).max(0.0);
                dx.hypot(dy)
            }
            IslandShape::Disk { radius } => (p.coords.norm() - radius).max(0.0),
            IslandShape::Polygon { vertices } => {
                if inside_polygon(vertices, p) {
                    return 0.0;
                }
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = Point2::from(vertices[i]);
                        let b = Point2::from(vertices[(i + 1) % n]);
                        segment_point_distance(&a, &b, p)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn height_at(&self, p: &Point2<f64>) -> f64 {
        match self.profile {
            HeightProfile::Flat { height } => height,
            HeightProfile::Cone { peak } => (peak * (1.0 - (p - self.center).norm() / self.reach)).max(0.0),
        }
    }

    /// Whether the planar segment `a → b` meets the footprint.
    fn segment_meets(&self, a: &Point2<f64>, b: &Point2<f64>) -> bool {
        match &self.shape {
            IslandShape::Disk { radius } => segment_point_distance(a, b, &Point2::origin()) <= *radius,
            IslandShape::Rectangle { width, height } => {
                // Liang–Barsky clip against the box.
                let d = b - a;
                let (mut t0, mut t1) = (0.0f64, 1.0f64);
                let (hw, hh) = (width / 2.0, height / 2.0);
                for (p, q) in [(-d.x, a.x + hw), (d.x, hw - a.x), (-d.y, a.y + hh), (d.y, hh - a.y)] {
                    if p == 0.0 {
                        if q < 0.0 {
                            return false;
                        }
                    } else {
                        let r = q / p;
                        if p < 0.0 {
                            t0 = t0.max(r);
                        } else {
                            t1 = t1.min(r);
                        }
                    }
                }
                t0 <= t1
            }
            IslandShape::Polygon { vertices } => {
                if inside_polygon(vertices, a) || inside_polygon(vertices, b) {
                    return true;
                }
                let n = vertices.len();
                (0..n).any(|i| segments_cross(a, b, &Point2::from(vertices[i]), &Point2::from(vertices[(i + 1) % n])))
            }
        }
    }

    /// Whether the ray `origin + t·dir`, `t ≥ 0`, passes through the solid.
    fn ray_hits(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> bool {
        // Slab 0 ≤ z ≤ top.
        let top = self.top();
        let (mut lo, mut hi) = (0.0, MAX_RAY_LENGTH);
        if dir.z == 0.0 {
            if origin.z < 0.0 || origin.z > top {
                return false;
            }
        } else {
            let (ta, tb) = ((0.0 - origin.z) / dir.z, (top - origin.z) / dir.z);
            lo = f64::max(lo, ta.min(tb));
            hi = f64::min(hi, ta.max(tb));
        }
        if lo > hi {
            return false;
        }
        if let HeightProfile::Cone { peak } = self.profile {
            // Inside the slab the cone test k·ρ(t) ≤ peak − z(t) has a
            // non-negative right side, so squaring it is exact.
            let k = peak / self.reach;
            let a = Vector2::new(origin.x - self.center.x, origin.y - self.center.y);
            let b = dir.xy();
            let c0 = peak - origin.z;
            let qa = k * k * b.norm_squared() - dir.z * dir.z;
            let qb = 2.0 * (k * k * a.dot(&b) + c0 * dir.z);
            let qc = k * k * a.norm_squared() - c0 * c0;
            match quadratic_nonpositive_within(qa, qb, qc, lo, hi) {
                Some((l, h)) => (lo, hi) = (l, h),
                None => return false,
            }
        }
        let pa = Point2::new(origin.x + lo * dir.x, origin.y + lo * dir.y);
        let pb = Point2::new(origin.x + hi * dir.x, origin.y + hi * dir.y);
        self.segment_meets(&pa, &pb)
    }
}

/// Hull of `{t ∈ [lo, hi] : a·t² + b·t + c ≤ 0}`.
fn quadratic_nonpositive_within(a: f64, b: f64, c: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let q = |t: f64| (a * t + b) * t + c;
    let mut cuts = vec![lo];
    if a == 0.0 {
        if b != 0.0 {
            cuts.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let m = -0.5 * (b + b.signum() * s);
            if m != 0.0 {
                cuts.push(m / a);
                cuts.push(c / m);
            } else {
                cuts.push(0.0);
            }
        }
    }
    cuts.push(hi);
    cuts.retain(|t| *t >= lo && *t <= hi);
    cuts.sort_by(f64::total_cmp);
    let mut hull: Option<(f64, f64)> = None;
    let mut include = |l: f64, h: f64| {
        hull = Some(hull.map_or((l, h), |(a, b)| (a.min(l), b.max(h))));
    };
    for &t in &cuts {
        if q(t) <= 0.0 {
            include(t, t);
        }
    }
    for w in cuts.windows(2) {
        if q(0.5 * (w[0] + w[1])) <= 0.0 {
            include(w[0], w[1]);
        }
    }
    hull
}

/// Draws uniform and Gaussian variates from a ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct SceneRng(ChaCha8Rng);

impl SceneRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller (cosine branch only).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

/// A similarity with log-uniform scale in `[0.1, 10]`, uniformly random
/// rotation and translation uniform in `[−100, 100]³`.
pub fn random_sim3(rng: &mut SceneRng) -> Sim3Transform {
    let scale = 10f64.powf(2.0 * rng.uniform() - 1.0);
    // Uniform unit quaternion (Shoemake).
    let (u1, u2, u3) = (rng.uniform(), rng.uniform(), rng.uniform());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(b * (2.0 * PI * u3).cos(), a * (2.0 * PI * u2).sin(), a * (2.0 * PI * u2).cos(), b * (2.0 * PI * u3).sin());
    let rotation = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
    let translation = Vector3::new(rng.uniform(), rng.uniform(), rng.uniform()).map(|u| 200.0 * u - 100.0);
    Sim3Transform::new(scale, rotation, translation).expect("random similarity is valid")
}

/// Adds seeded zero-mean Gaussian noise.
pub trait Perturb: Sized {
    fn perturb(&self, sigma: f64, seed: u64) -> Result<Self, SynthError>;
}

fn noisy(points: impl Iterator<Item = Point3<f64>>, sigma: f64, seed: u64) -> Vec<Point3<f64>> {
    let mut rng = SceneRng::new(seed);
    points
        .map(|p| {
            let (x, y, z) = (rng.normal(), rng.normal(), rng.normal());
            p + Vector3::new(x, y, z) * sigma
        })
        .collect()
}

fn check_sigma(sigma: f64) -> Result<(), SynthError> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(SynthError::NegativeSigma(sigma))
    }
}

impl Perturb for PointCloud {
    /// Noise per coordinate, drawn x, y, z point by point.
    fn perturb(&self, sigma: f64, seed: u64) -> Result<Self, SynthError> {
        check_sigma(sigma)?;
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.with_positions_unchecked(noisy(self.positions().iter().copied(), sigma, seed)))
    }
}

impl Perturb for Trajectory {
    /// Moves camera centers only; orientations are unchanged.
    fn perturb(&self, sigma: f64, seed: u64) -> Result<Self, SynthError> {
        check_sigma(sigma)?;
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        let centers = noisy(self.frames().iter().map(|f| f.pose.camera_center()), sigma, seed);
        let frames = self.frames().iter().zip(centers).map(|(f, c)| {
            (f.frame_id, RigidPose::new_unchecked(*f.pose.rotation(), c.coords, PoseConvention::CameraToWorld))
        });
        Ok(Trajectory::new(frames).expect("frame ids unchanged"))
    }
}

pub fn perturb<T: Perturb>(value: &T, sigma: f64, seed: u64) -> Result<T, SynthError> {
    value.perturb(sigma, seed)
}

/// Camera-to-world pose at `eye` looking at `target` with `+z` up.
///
/// Camera axes: `x` right, `y` down, `z` forward.
pub fn look_at(eye: &Point3<f64>, target: &Point3<f64>) -> RigidPose {
    let forward = (target - eye).normalize();
    let mut right = forward.cross(&Vector3::z());
    if right.norm() < 1e-12 {
        right = Vector3::x();
    }
    let right = right.normalize();
    let down = forward.cross(&right);
    RigidPose::new_unchecked(Matrix3::from_columns(&[right, down, forward]), eye.coords, PoseConvention::CameraToWorld)
}

/// Orbit poses; frame `i` sits at angle `2π·i/F`.
pub fn orbit_trajectory(orbit: &Orbit) -> Trajectory {
    let target = Point3::from(orbit.look_at);
    let frames = (0..orbit.frame_count).map(|i| {
        let theta = 2.0 * PI * i as f64 / orbit.frame_count as f64;
        let eye = Point3::new(
            target.x + orbit.radius * theta.cos(),
            target.y + orbit.radius * theta.sin(),
            orbit.altitude,
        );
        (i as i64, look_at(&eye, &target))
    });
    Trajectory::new(frames).expect("increasing frame ids")
}

/// Exact silhouette mask of the island for one camera, grown by one pixel.
///
/// A pixel is set when the ray through its center passes through the solid;
/// the 3×3 dilation keeps points on the silhouette edge inside the mask.
fn render_mask(solid: &Solid, pose: &RigidPose, k: &IntrinsicsRecord) -> MaskImage {
    let (w, h) = (k.width as usize, k.height as usize);
    let origin = pose.camera_center();
    let r = pose.to_camera_to_world();
    let r = r.rotation();
    let mut hit = vec![false; w * h];
    for v in 0..h {
        for u in 0..w {
            let dc = Vector3::new((u as f64 + 0.5 - k.cx) / k.fx, (v as f64 + 0.5 - k.cy) / k.fy, 1.0);
            hit[v * w + u] = solid.ray_hits(&origin, &(r * dc));
        }
    }
    let mut grown = vec![false; w * h];
    for v in 0..h {
        for u in 0..w {
            if hit[v * w + u] {
                for gv in v.saturating_sub(1)..=(v + 1).min(h - 1) {
                    for gu in u.saturating_sub(1)..=(u + 1).min(w - 1) {
                        grown[gv * w + gu] = true;
                    }
                }
            }
        }
    }
    MaskImage::new(k.width, k.height, grown).expect("buffer matches size")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    /// Island lattice points first, then sea points.
    pub truth_cloud: PointCloud,
    pub island_count: usize,
    pub truth_trajectory: Trajectory,
    /// The truth trajectory with `noise_sigma` added to the camera centers.
    pub reference_trajectory: Trajectory,
    pub recon_cloud: PointCloud,
    pub recon_trajectory: Trajectory,
    /// One per frame, in frame order.
    pub masks: Vec<MaskImage>,
    pub intrinsics: IntrinsicsRecord,
    /// Maps the reconstruction onto the truth.
    pub distortion: Sim3Transform,
    pub truth_area_m2: f64,
    pub truth_perimeter_taxicab_m: f64,
}

impl Scene {
    pub fn sea_count(&self) -> usize {
        self.truth_cloud.len() - self.island_count
    }

    /// Truth-frame views for labeling `truth_cloud` directly.
    pub fn views(&self) -> Vec<ViewFrame> {
        self.truth_trajectory
            .frames()
            .iter()
            .zip(&self.masks)
            .map(|(f, m)| ViewFrame::new(f.frame_id, f.pose, self.intrinsics, m.clone()).expect("scene is consistent"))
            .collect()
    }
}

/// Smallest sea-to-island distance that keeps every sea point out of the
/// (dilated) masks: the silhouette's shadow beyond the rim plus three ground
/// pixels, at the shallowest viewing angle of any camera.
pub fn sea_clearance(spec: &SceneSpec) -> f64 {
    let solid = Solid::new(spec);
    let (lo, hi) = solid.bounds();
    let c = Point2::new(spec.orbit.look_at[0], spec.orbit.look_at[1]);
    let corner = [lo, hi, Point2::new(lo.x, hi.y), Point2::new(hi.x, lo.y)]
        .iter()
        .map(|p| (p - c).norm())
        .fold(0.0, f64::max);
    let far = spec.orbit.radius + corner;
    let alt = spec.orbit.altitude;
    let (tan_e, sin_e) = (alt / far, alt / far.hypot(alt));
    let shadow = match spec.height_profile {
        HeightProfile::Flat { height } => height / tan_e,
        // Rays steeper than the flank clear the rim.
        HeightProfile::Cone { peak } if peak / solid.reach < tan_e => 0.0,
        HeightProfile::Cone { peak } => peak / tan_e,
    };
    let ground_pixel = far.hypot(alt) / (spec.intrinsics.fx.min(spec.intrinsics.fy) * sin_e);
    spec.sea_ring.spacing.max(shadow + 3.0 * ground_pixel)
}

fn lattice(lo: Point2<f64>, hi: Point2<f64>, step: f64) -> impl Iterator<Item = Point2<f64>> {
    // Small slack so an endpoint that is an exact multiple is not lost to rounding.
    let nx = ((hi.x - lo.x) / step + 1e-9).floor() as usize;
    let ny = ((hi.y - lo.y) / step + 1e-9).floor() as usize;
    (0..=nx).flat_map(move |i| (0..=ny).map(move |j| Point2::new(lo.x + i as f64 * step, lo.y + j as f64 * step)))
}

fn analytic_measures(shape: &IslandShape) -> (f64, f64) {
    match shape {
        IslandShape::Rectangle { width, height } => (width * height, 2.0 * (width + height)),
        IslandShape::Disk { radius } => (PI * radius * radius, 8.0 * radius),
        IslandShape::Polygon { vertices } => {
            let n = vertices.len();
            let taxicab = (0..n)
                .map(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    (b[0] - a[0]).abs() + (b[1] - a[1]).abs()
                })
                .sum();
            (polygon_area(vertices).abs(), taxicab)
        }
    }
}

/// Builds a scene. Deterministic in `spec` (including its seed) and
/// independent of `exec`.
pub fn generate_scene(spec: &SceneSpec, exec: Execution) -> Result<Scene, SynthError> {
    spec.validate()?;
    let solid = Solid::new(spec);
    let (lo, hi) = solid.bounds();

    let mut positions: Vec<Point3<f64>> = lattice(lo, hi, spec.point_spacing)
        .filter(|p| solid.contains_2d(p))
        .map(|p| Point3::new(p.x, p.y, solid.height_at(&p)))
        .collect();
    let island_count = positions.len();
    if island_count == 0 {
        return invalid("island lattice is empty; reduce point_spacing");
    }
    let (margin, gap) = (spec.sea_ring.margin, sea_clearance(spec));
    let pad = Vector2::new(margin, margin);
    positions.extend(
        lattice(lo - pad, hi + pad, spec.sea_ring.spacing)
            .filter(|p| {
                let d = solid.distance_2d(p);
                d > gap && d <= margin
            })
            .map(|p| Point3::new(p.x, p.y, 0.0)),
    );
    let mut colors = vec![ISLAND_COLOR; island_count];
    colors.resize(positions.len(), SEA_COLOR);
    let truth_cloud = PointCloud::new(positions)
        .and_then(|c| c.with_colors(colors))
        .map_err(|e| SynthError::SpecInvalid(e.to_string()))?;

    let truth_trajectory = orbit_trajectory(&spec.orbit);
    let reference_trajectory = truth_trajectory.perturb(spec.noise_sigma, spec.seed ^ NOISE_SEED_SALT)?;

    let distortion = match spec.distortion {
        Distortion::Identity => Sim3Transform::identity(),
        Distortion::Fixed { scale, rotation: [w, x, y, z], translation } => {
            let rotation = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)).to_rotation_matrix().into_inner();
            Sim3Transform::new(scale, rotation, Vector3::from(translation))
                .map_err(|e| SynthError::SpecInvalid(e.to_string()))?
        }
        Distortion::Random => random_sim3(&mut SceneRng::new(spec.seed)),
    };
    let (recon_cloud, recon_trajectory) = if spec.distortion == Distortion::Identity {
        (truth_cloud.clone(), truth_trajectory.clone())
    } else {
        let inverse = distortion.inverse();
        let frames = truth_trajectory.frames().iter().map(|f| (f.frame_id, apply_sim3_to_pose(&f.pose, &inverse)));
        (apply_sim3_to_points(&truth_cloud, &inverse), Trajectory::new(frames).expect("frame ids unchanged"))
    };

    let render = |i: usize| render_mask(&solid, &truth_trajectory.frames()[i].pose, &spec.intrinsics);
    let n = truth_trajectory.len();
    #[cfg(feature = "parallel")]
    let masks: Vec<MaskImage> = if exec.is_parallel() {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(render).collect()
    } else {
        (0..n).map(render).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let masks: Vec<MaskImage> = {
        let _ = exec;
        (0..n).map(render).collect()
    };

    let (truth_area_m2, truth_perimeter_taxicab_m) = analytic_measures(&spec.island_shape);
    Ok(Scene {
        spec: spec.clone(),
        truth_cloud,
        island_count,
        truth_trajectory,
        reference_trajectory,
        recon_cloud,
        recon_trajectory,
        masks,
        intrinsics: spec.intrinsics,
        distortion,
        truth_area_m2,
        truth_perimeter_taxicab_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backproject::project_to_pixel;

    fn small(mut spec: SceneSpec) -> SceneSpec {
        spec.point_spacing = 2.0;
        spec.orbit.frame_count = 6;
        spec.intrinsics = IntrinsicsRecord { fx: 350.0, fy: 350.0, cx: 200.0, cy: 150.0, width: 400, height: 300 };
        spec
    }

    #[test]
    fn analytic_truth() {
        let rect = generate_scene(&small(SceneSpec::rectangle(200.0, 300.0)), Execution::Sequential).unwrap();
        assert_eq!(rect.truth_area_m2, 60_000.0);
        assert_eq!(rect.truth_perimeter_taxicab_m, 1_000.0);
        let disk = generate_scene(&small(SceneSpec::cone_disk(100.0, 20.0)), Execution::Sequential).unwrap();
        assert!((disk.truth_area_m2 - 31_415.93).abs() < 0.01);
        assert_eq!(disk.truth_perimeter_taxicab_m, 800.0);
    }

    #[test]
    fn identity_scene_is_bitwise_truth() {
        let spec = SceneSpec { distortion: Distortion::Identity, ..small(SceneSpec::default()) };
        let scene = generate_scene(&spec, Execution::Sequential).unwrap();
        assert_eq!(scene.recon_cloud, scene.truth_cloud);
        assert_eq!(scene.recon_trajectory, scene.truth_trajectory);
        assert_eq!(scene.reference_trajectory, scene.truth_trajectory);
    }

    #[test]
    fn rectangle_lattice_counts() {
        let scene = generate_scene(&small(SceneSpec::rectangle(20.0, 30.0)), Execution::Sequential).unwrap();
        assert_eq!(scene.island_count, 11 * 16);
        assert!(scene.sea_count() > 0);
        assert!(scene.truth_cloud.positions()[scene.island_count..].iter().all(|p| p.z == 0.0));
    }

    #[test]
    fn spec_errors() {
        let spec = SceneSpec { point_spacing: 0.0, ..SceneSpec::default() };
        assert!(matches!(generate_scene(&spec, Execution::Sequential), Err(SynthError::SpecInvalid(_))));
        let mut spec = SceneSpec::default();
        spec.orbit.frame_count = 2;
        assert!(matches!(spec.validate(), Err(SynthError::SpecInvalid(_))));
        let spec = SceneSpec { island_shape: IslandShape::Polygon { vertices: vec![[0.0, 0.0], [1.0, 1.0]] }, ..SceneSpec::default() };
        assert!(spec.validate().is_err());
        let spec = SceneSpec { distortion: Distortion::Fixed { scale: -1.0, rotation: [1.0, 0.0, 0.0, 0.0], translation: [0.0; 3] }, ..SceneSpec::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn perturb_examples() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0); 4]).unwrap();
        assert_eq!(perturb(&cloud, 0.0, 9).unwrap(), cloud);
        assert_eq!(perturb(&cloud, 0.3, 9).unwrap(), perturb(&cloud, 0.3, 9).unwrap());
        assert_ne!(perturb(&cloud, 0.3, 9).unwrap(), perturb(&cloud, 0.3, 10).unwrap());
        assert_eq!(perturb(&cloud, -1.0, 0), Err(SynthError::NegativeSigma(-1.0)));
    }

    #[test]
    fn uniform_stream_is_pinned() {
        let mut a = SceneRng::new(42);
        let mut b = SceneRng::new(42);
        for _ in 0..100 {
            let u = a.uniform();
            assert!((0.0..1.0).contains(&u));
            assert_eq!(u, b.uniform());
        }
    }

    #[test]
    fn look_at_points_forward() {
        let pose = look_at(&Point3::new(10.0, 0.0, 5.0), &Point3::origin());
        let w2c = pose.to_world_to_camera();
        let c = w2c.transform_point(&Point3::origin());
        assert!(c.x.abs() < 1e-12 && c.y.abs() < 1e-12 && c.z > 0.0);
        // A point above the target appears higher in the image (smaller v).
        assert!(w2c.transform_point(&Point3::new(0.0, 0.0, 1.0)).y < 0.0);
        assert!((pose.rotation().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_interval() {
        // t² − 1 ≤ 0 on [−5, 5] → [−1, 1].
        assert_eq!(quadratic_nonpositive_within(1.0, 0.0, -1.0, -5.0, 5.0), Some((-1.0, 1.0)));
        assert_eq!(quadratic_nonpositive_within(1.0, 0.0, 1.0, -5.0, 5.0), None);
        // −t² + 1 ≤ 0 on [0, 5] → [1, 5].
        assert_eq!(quadratic_nonpositive_within(-1.0, 0.0, 1.0, 0.0, 5.0), Some((1.0, 5.0)));
        assert_eq!(quadratic_nonpositive_within(0.0, 1.0, -2.0, 0.0, 5.0), Some((0.0, 2.0)));
    }

    #[test]
    fn ray_hits_cone_not_sea() {
        let solid = Solid::new(&SceneSpec::cone_disk(100.0, 20.0));
        let eye = Point3::new(0.0, 0.0, 500.0);
        assert!(solid.ray_hits(&eye, &Vector3::new(0.0, 0.0, -1.0)));
        // Straight down just outside the rim.
        assert!(!solid.ray_hits(&Point3::new(100.5, 0.0, 500.0), &Vector3::new(0.0, 0.0, -1.0)));
        assert!(solid.ray_hits(&Point3::new(99.5, 0.0, 500.0), &Vector3::new(0.0, 0.0, -1.0)));
        // Grazing over the apex from the side at z = 21 misses, at z = 19 hits.
        assert!(!solid.ray_hits(&Point3::new(-500.0, 0.0, 21.0), &Vector3::new(1.0, 0.0, 0.0)));
        assert!(solid.ray_hits(&Point3::new(-500.0, 0.0, 19.0), &Vector3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn polygon_helpers() {
        let square = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert_eq!(polygon_area(&square), 4.0);
        assert_eq!(polygon_centroid(&square), Point2::new(1.0, 1.0));
        assert!(inside_polygon(&square, &Point2::new(1.0, 1.0)));
        assert!(!inside_polygon(&square, &Point2::new(3.0, 1.0)));
        assert_eq!(analytic_measures(&IslandShape::Polygon { vertices: square }), (4.0, 8.0));
    }

    #[test]
    fn masks_cover_island_points() {
        for spec in [SceneSpec::rectangle(60.0, 40.0), SceneSpec::cone_disk(40.0, 15.0)] {
            let scene = generate_scene(&small(spec), Execution::Sequential).unwrap();
            for (frame, mask) in scene.truth_trajectory.frames().iter().zip(&scene.masks) {
                let w2c = frame.pose.to_world_to_camera();
                for p in &scene.truth_cloud.positions()[..scene.island_count] {
                    if let Some(px) = project_to_pixel(&w2c.transform_point(p), &scene.intrinsics, 0.1) {
                        assert_eq!(mask.get(px.u, px.v), Some(true), "frame {} point {p}", frame.frame_id);
                    }
                }
            }
        }
    }

    #[test]
    fn schedule_independent() {
        let spec = small(SceneSpec::cone_disk(40.0, 15.0));
        assert_eq!(generate_scene(&spec, Execution::Sequential), generate_scene(&spec, Execution::Parallel));
    }
}
