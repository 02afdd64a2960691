use nalgebra::{Matrix3, Matrix4, Point3, Vector3};

use super::pose::check_rotation;
use super::{GeomError, PointCloud, PoseConvention, RigidPose};

/// Similarity transform `p ↦ c·R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim3Transform {
    scale: f64,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Sim3Transform {
    pub fn new(
        scale: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, GeomError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeomError::NonPositiveScale(scale));
        }
        check_rotation(&rotation)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeomError::NonFinite("translation"));
        }
        Ok(Self { scale, rotation, translation })
    }

    pub(crate) fn new_unchecked(scale: f64, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { scale, rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new_unchecked(1.0, Matrix3::identity(), Vector3::zeros())
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `H` with `H[:3,:3] = c·R`, `H[:3,3] = t` and last row `(0, 0, 0, 1)`.
    pub fn as_homogeneous(&self) -> Matrix4<f64> {
        let mut h = Matrix4::identity();
        h.fixed_view_mut::<3, 3>(0, 0).copy_from(&(self.rotation * self.scale));
        h.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        h
    }

    /// Recovers the transform from a homogeneous similarity matrix.
    pub fn from_homogeneous(h: &Matrix4<f64>) -> Result<Self, GeomError> {
        let block: Matrix3<f64> = h.fixed_view::<3, 3>(0, 0).into_owned();
        let scale = block.determinant().cbrt();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeomError::NonPositiveScale(scale));
        }
        Self::new(
            scale,
            rotation_from_homogeneous(h, scale),
            h.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    pub fn inverse(&self) -> Self {
        let inv_scale = 1.0 / self.scale;
        let rt = self.rotation.transpose();
        Self::new_unchecked(inv_scale, rt, -(rt * self.translation) * inv_scale)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Sim3Transform) -> Self {
        Self::new_unchecked(
            self.scale * other.scale,
            self.rotation * other.rotation,
            self.rotation * other.translation * self.scale + self.translation,
        )
    }

    #[inline]
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords * self.scale + self.translation)
    }
}

/// The pure rotation `H[:3,:3] / c` of a homogeneous similarity.
fn rotation_from_homogeneous(h: &Matrix4<f64>, scale: f64) -> Matrix3<f64> {
    h.fixed_view::<3, 3>(0, 0).into_owned() / scale
}

/// Moves a camera by a similarity while keeping its rotation orthonormal.
///
/// `R_new = R_align·R_orig` with `R_align = H[:3,:3]/c`, and
/// `t_new = c·R·t_orig + t`. The result is camera-to-world regardless of
/// the input convention.
pub fn apply_sim3_to_pose(pose: &RigidPose, s: &Sim3Transform) -> RigidPose {
    let c2w = pose.to_camera_to_world();
    let h = s.as_homogeneous();
    let r_align = rotation_from_homogeneous(&h, s.scale());
    RigidPose::new_unchecked(
        r_align * c2w.rotation(),
        s.rotation() * c2w.translation() * s.scale() + s.translation(),
        PoseConvention::CameraToWorld,
    )
}

/// Applies `p ↦ c·R·p + t` to every position; colors and votes are carried through.
pub fn apply_sim3_to_points(cloud: &PointCloud, s: &Sim3Transform) -> PointCloud {
    let positions = cloud.positions().iter().map(|p| s.transform_point(p)).collect();
    cloud.with_positions_unchecked(positions)
}
