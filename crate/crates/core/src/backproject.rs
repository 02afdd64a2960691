//! Multi-view mask voting.
//!
//! Every point is transformed into each camera, floor-projected through the
//! pinhole intrinsics and tested against that view's binary mask. A view only
//! votes for a point the camera can actually see: the point must lie beyond
//! the near plane, inside the image, and within `depth_tolerance` of the
//! nearest point that landed on the same pixel (a per-view Z-buffer at mask
//! resolution). Points with at least `min_votes` votes are island points.
//!
//! With `min_votes = 1` and an infinite tolerance this is exactly the union of
//! per-view mask hits.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::geom::{PointCloud, RigidPose};
use crate::ingest::{IntrinsicsRecord, MaskImage};

pub const DEFAULT_MIN_VOTES: u32 = 3;
pub const DEFAULT_DEPTH_TOLERANCE: f64 = 2.0;
/// Points with camera depth `Z_c ≤ 0.1` m are discarded.
pub const DEFAULT_NEAR_PLANE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackprojectError {
    #[error("no views supplied")]
    NoViews,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point cloud carries no votes")]
    VotesMissing,
    #[error("invalid labeling config: {0}")]
    InvalidConfig(String),
    #[error("frame {frame_id}: mask is {mask_width}×{mask_height} but intrinsics are {width}×{height}")]
    MaskSizeMismatch { frame_id: i64, mask_width: u32, mask_height: u32, width: u32, height: u32 },
    #[error("frame {frame_id}: {message}")]
    InvalidIntrinsics { frame_id: i64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelingConfig {
    pub min_votes: u32,
    /// Meters; may be `f64::INFINITY` to disable occlusion tests.
    pub depth_tolerance: f64,
    pub near_plane: f64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            min_votes: DEFAULT_MIN_VOTES,
            depth_tolerance: DEFAULT_DEPTH_TOLERANCE,
            near_plane: DEFAULT_NEAR_PLANE,
        }
    }
}

impl LabelingConfig {
    /// Pure union of mask hits: one vote suffices and nothing is occluded.
    pub fn union() -> Self {
        Self { min_votes: 1, depth_tolerance: f64::INFINITY, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), BackprojectError> {
        if self.min_votes < 1 {
            return Err(BackprojectError::InvalidConfig("min_votes must be at least 1".into()));
        }
        if !(self.depth_tolerance > 0.0) {
            return Err(BackprojectError::InvalidConfig("depth_tolerance must be positive".into()));
        }
        if !(self.near_plane > 0.0 && self.near_plane.is_finite()) {
            return Err(BackprojectError::InvalidConfig("near_plane must be positive".into()));
        }
        Ok(())
    }
}

/// One calibrated image and its binary mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewFrame {
    frame_id: i64,
    world_to_camera: RigidPose,
    intrinsics: IntrinsicsRecord,
    mask: MaskImage,
}

impl ViewFrame {
    /// `pose` may be in either convention; it is stored world-to-camera.
    pub fn new(
        frame_id: i64,
        pose: RigidPose,
        intrinsics: IntrinsicsRecord,
        mask: MaskImage,
    ) -> Result<Self, BackprojectError> {
        intrinsics
            .validate()
            .map_err(|e| BackprojectError::InvalidIntrinsics { frame_id, message: e.to_string() })?;
        if mask.width() != intrinsics.width || mask.height() != intrinsics.height {
            return Err(BackprojectError::MaskSizeMismatch {
                frame_id,
                mask_width: mask.width(),
                mask_height: mask.height(),
                width: intrinsics.width,
                height: intrinsics.height,
            });
        }
        Ok(Self { frame_id, world_to_camera: pose.to_world_to_camera(), intrinsics, mask })
    }

    pub fn frame_id(&self) -> i64 {
        self.frame_id
    }

    pub fn world_to_camera(&self) -> &RigidPose {
        &self.world_to_camera
    }

    pub fn intrinsics(&self) -> &IntrinsicsRecord {
        &self.intrinsics
    }

    pub fn mask(&self) -> &MaskImage {
        &self.mask
    }

    /// Row-major pixel index of `p`, or `None` if it is not imaged.
    #[inline]
    fn pixel_of(&self, p: &Point3<f64>, near_plane: f64) -> Option<(usize, f64)> {
        let pc = self.world_to_camera.transform_point(p);
        project_to_pixel(&pc, &self.intrinsics, near_plane)
            .map(|px| (px.v as usize * self.intrinsics.width as usize + px.u as usize, pc.z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pixel {
    pub u: u32,
    pub v: u32,
}

/// `P_c = R_w2c·P_w + t_w2c`. A camera-to-world pose is inverted first.
pub fn world_to_camera_point(p: &Point3<f64>, pose: &RigidPose) -> Point3<f64> {
    pose.to_world_to_camera().transform_point(p)
}

/// Floor-projects a camera-frame point: `u = ⌊fx·X/Z + cx⌋`, `v = ⌊fy·Y/Z + cy⌋`.
///
/// `None` when `Z ≤ near_plane` or the pixel falls outside the image.
#[inline]
pub fn project_to_pixel(pc: &Point3<f64>, k: &IntrinsicsRecord, near_plane: f64) -> Option<Pixel> {
    if !(pc.z > near_plane) {
        return None;
    }
    let x = k.fx * pc.x / pc.z + k.cx;
    let y = k.fy * pc.y / pc.z + k.cy;
    // Comparisons are false for NaN, so non-finite inputs fall through to None.
    if x >= 0.0 && x < k.width as f64 && y >= 0.0 && y < k.height as f64 {
        Some(Pixel { u: x.floor() as u32, v: y.floor() as u32 })
    } else {
        None
    }
}

/// Per-pixel minimum camera depth; `+∞` where no point landed.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBuffer {
    width: u32,
    height: u32,
    min_depth: Vec<f64>,
}

impl DepthBuffer {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn depths(&self) -> &[f64] {
        &self.min_depth
    }

    pub fn get(&self, u: u32, v: u32) -> Option<f64> {
        (u < self.width && v < self.height).then(|| self.min_depth[v as usize * self.width as usize + u as usize])
    }
}

pub fn build_depth_buffer(cloud: &PointCloud, view: &ViewFrame, near_plane: f64) -> DepthBuffer {
    let mut min_depth = Vec::new();
    fill_depth(cloud.positions(), view, near_plane, &mut min_depth);
    DepthBuffer { width: view.intrinsics.width, height: view.intrinsics.height, min_depth }
}

fn fill_depth(positions: &[Point3<f64>], view: &ViewFrame, near_plane: f64, buffer: &mut Vec<f64>) {
    let pixels = view.intrinsics.width as usize * view.intrinsics.height as usize;
    buffer.clear();
    buffer.resize(pixels, f64::INFINITY);
    for p in positions {
        if let Some((idx, z)) = view.pixel_of(p, near_plane) {
            if z < buffer[idx] {
                buffer[idx] = z;
            }
        }
    }
}

/// Adds this view's votes into `votes`, reusing `buffer` as the Z-buffer.
fn vote_view(positions: &[Point3<f64>], view: &ViewFrame, cfg: &LabelingConfig, buffer: &mut Vec<f64>, votes: &mut [u32]) {
    fill_depth(positions, view, cfg.near_plane, buffer);
    let mask = view.mask.data();
    for (p, vote) in positions.iter().zip(votes.iter_mut()) {
        if let Some((idx, z)) = view.pixel_of(p, cfg.near_plane) {
            if mask[idx] && z <= buffer[idx] + cfg.depth_tolerance {
                *vote += 1;
            }
        }
    }
}

/// Number of views that see each point inside their mask.
pub fn count_votes(
    cloud: &PointCloud,
    views: &[ViewFrame],
    cfg: &LabelingConfig,
    exec: Execution,
) -> Result<Vec<u32>, BackprojectError> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(BackprojectError::NoViews);
    }
    if cloud.is_empty() {
        return Err(BackprojectError::EmptyCloud);
    }
    let positions = cloud.positions();
    let n = positions.len();

    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        // Integer addition commutes, so any split of the views gives the sequential counts.
        return Ok(views
            .par_iter()
            .fold(
                || (vec![0u32; n], Vec::new()),
                |(mut votes, mut buffer), view| {
                    vote_view(positions, view, cfg, &mut buffer, &mut votes);
                    (votes, buffer)
                },
            )
            .map(|(votes, _)| votes)
            .reduce(
                || vec![0u32; n],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            ));
    }
    let _ = exec;

    let mut votes = vec![0u32; n];
    let mut buffer = Vec::new();
    for view in views {
        vote_view(positions, view, cfg, &mut buffer, &mut votes);
    }
    Ok(votes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutcome {
    /// The input cloud with a `votes` attribute.
    pub cloud: PointCloud,
    /// Indices of points with `votes ≥ min_votes`, ascending.
    pub island: Vec<usize>,
}

pub fn label_points(
    cloud: &PointCloud,
    views: &[ViewFrame],
    cfg: &LabelingConfig,
) -> Result<LabelOutcome, BackprojectError> {
    label_points_with(cloud, views, cfg, Execution::default())
}

pub fn label_points_with(
    cloud: &PointCloud,
    views: &[ViewFrame],
    cfg: &LabelingConfig,
    exec: Execution,
) -> Result<LabelOutcome, BackprojectError> {
    let votes = count_votes(cloud, views, cfg, exec)?;
    let island = island_indices(&votes, cfg.min_votes);
    let cloud = cloud.clone().with_votes(votes).expect("one vote count per point");
    Ok(LabelOutcome { cloud, island })
}

pub fn island_indices(votes: &[u32], min_votes: u32) -> Vec<usize> {
    votes.iter().enumerate().filter(|(_, &v)| v >= min_votes).map(|(i, _)| i).collect()
}

/// The points with at least `min_votes` votes, in their original order.
pub fn select_island(cloud: &PointCloud, min_votes: u32) -> Result<PointCloud, BackprojectError> {
    let votes = cloud.votes().ok_or(BackprojectError::VotesMissing)?;
    Ok(cloud.select(&island_indices(votes, min_votes)))
}
