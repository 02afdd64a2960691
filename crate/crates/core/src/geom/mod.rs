//! Rigid and similarity transforms, trajectories, point clouds and the
//! closed-form Umeyama Sim(3) estimator.

mod cloud;
mod pose;
mod sim3;
mod trajectory;
mod umeyama;

pub use cloud::PointCloud;
pub use pose::{rotation_angle_between, PoseConvention, RigidPose};
pub use sim3::{apply_sim3_to_points, apply_sim3_to_pose, Sim3Transform};
pub use trajectory::{alignment_rmse, alignment_rmse_points, Trajectory, TrajectoryFrame};
pub use umeyama::{umeyama_align, UmeyamaFit};

/// Maximum tolerated `max|RᵀR − I|` and `|det R − 1|` for a rotation.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// Minimum source variance accepted by [`umeyama_align`].
pub const MIN_SOURCE_VARIANCE: f64 = 1e-12;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

fn show_id(id: &Option<i64>) -> String {
    id.map_or_else(|| "none".to_string(), |v| v.to_string())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("rotation is not orthonormal (max |RᵀR − I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("rotation is improper (det = {det})")]
    ImproperRotation { det: f64 },
    #[error("similarity scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("source has {source_len} points but target has {target_len}")]
    LengthMismatch { source_len: usize, target_len: usize },
    #[error("alignment needs at least 3 point pairs, got {0}")]
    TooFewPoints(usize),
    #[error("source points are degenerate (variance {0:e})")]
    DegenerateSource(f64),
    #[error("frame id mismatch at index {index}: source {}, target {}", show_id(source_id), show_id(target_id))]
    FrameIdMismatch { index: usize, source_id: Option<i64>, target_id: Option<i64> },
    #[error("frame ids must be strictly increasing (index {index}: {previous} then {current})")]
    FrameOrder { index: usize, previous: i64, current: i64 },
    #[error("per-point attribute `{attribute}` has {got} entries for {expected} points")]
    AttributeLength { attribute: &'static str, expected: usize, got: usize },
}
