use nalgebra::Point3;

use super::{GeomError, RigidPose, Sim3Transform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryFrame {
    pub frame_id: i64,
    /// Always camera-to-world.
    pub pose: RigidPose,
}

/// Ordered camera poses keyed by strictly increasing frame ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    frames: Vec<TrajectoryFrame>,
}

impl Trajectory {
    /// Poses in either convention are canonicalized to camera-to-world.
    pub fn new(frames: impl IntoIterator<Item = (i64, RigidPose)>) -> Result<Self, GeomError> {
        let frames: Vec<TrajectoryFrame> = frames
            .into_iter()
            .map(|(frame_id, pose)| TrajectoryFrame { frame_id, pose: pose.to_camera_to_world() })
            .collect();
        for (index, pair) in frames.windows(2).enumerate() {
            if pair[1].frame_id <= pair[0].frame_id {
                return Err(GeomError::FrameOrder {
                    index: index + 1,
                    previous: pair[0].frame_id,
                    current: pair[1].frame_id,
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[TrajectoryFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = i64> + '_ {
        self.frames.iter().map(|f| f.frame_id)
    }

    pub fn camera_centers(&self) -> Vec<Point3<f64>> {
        self.frames.iter().map(|f| f.pose.camera_center()).collect()
    }

    /// Errors unless both trajectories list the same frame ids in the same order.
    ///
    /// A frame present on only one side is reported as a mismatch at its index.
    pub fn check_matches(&self, other: &Trajectory) -> Result<(), GeomError> {
        for index in 0..self.len().max(other.len()) {
            let source_id = self.frames.get(index).map(|f| f.frame_id);
            let target_id = other.frames.get(index).map(|f| f.frame_id);
            if source_id != target_id {
                return Err(GeomError::FrameIdMismatch { index, source_id, target_id });
            }
        }
        Ok(())
    }
}

/// Root-mean-square camera-center residual `‖y_i − (c·R·x_i + t)‖` over matched frames.
pub fn alignment_rmse(source: &Trajectory, target: &Trajectory, s: &Sim3Transform) -> Result<f64, GeomError> {
    source.check_matches(target)?;
    alignment_rmse_points(&source.camera_centers(), &target.camera_centers(), s)
}

pub fn alignment_rmse_points(
    source: &[Point3<f64>],
    target: &[Point3<f64>],
    s: &Sim3Transform,
) -> Result<f64, GeomError> {
    if source.len() != target.len() {
        return Err(GeomError::LengthMismatch { source_len: source.len(), target_len: target.len() });
    }
    if source.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = source
        .iter()
        .zip(target)
        .map(|(x, y)| (y - s.transform_point(x)).norm_squared())
        .sum();
    Ok((sum / source.len() as f64).sqrt())
}
