use nalgebra::{Matrix3, Matrix4, Point3, Vector3};

use super::{GeomError, ORTHONORMAL_TOLERANCE};

/// Which way a [`RigidPose`] maps points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoseConvention {
    /// Maps camera coordinates to world coordinates; the translation is the camera center.
    CameraToWorld,
    /// Maps world coordinates to camera coordinates (`P_c = R·P_w + t`).
    WorldToCamera,
}

impl PoseConvention {
    pub fn flipped(self) -> Self {
        match self {
            PoseConvention::CameraToWorld => PoseConvention::WorldToCamera,
            PoseConvention::WorldToCamera => PoseConvention::CameraToWorld,
        }
    }
}

/// A proper rigid transform of one camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    convention: PoseConvention,
}

impl RigidPose {
    /// Builds a pose, rejecting rotations that are not orthonormal or not proper.
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        convention: PoseConvention,
    ) -> Result<Self, GeomError> {
        check_rotation(&rotation)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeomError::NonFinite("translation"));
        }
        Ok(Self { rotation, translation, convention })
    }

    /// Skips validation; callers guarantee the rotation is proper to rounding.
    pub(crate) fn new_unchecked(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        convention: PoseConvention,
    ) -> Self {
        Self { rotation, translation, convention }
    }

    pub fn identity(convention: PoseConvention) -> Self {
        Self::new_unchecked(Matrix3::identity(), Vector3::zeros(), convention)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn convention(&self) -> PoseConvention {
        self.convention
    }

    /// The inverse transform, tagged with the opposite convention.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new_unchecked(rt, -(rt * self.translation), self.convention.flipped())
    }

    pub fn to_camera_to_world(&self) -> Self {
        match self.convention {
            PoseConvention::CameraToWorld => *self,
            PoseConvention::WorldToCamera => self.inverse(),
        }
    }

    pub fn to_world_to_camera(&self) -> Self {
        match self.convention {
            PoseConvention::WorldToCamera => *self,
            PoseConvention::CameraToWorld => self.inverse(),
        }
    }

    /// Camera center in world coordinates, independent of the convention.
    pub fn camera_center(&self) -> Point3<f64> {
        match self.convention {
            PoseConvention::CameraToWorld => Point3::from(self.translation),
            PoseConvention::WorldToCamera => {
                Point3::from(-(self.rotation.transpose() * self.translation))
            }
        }
    }

    /// Applies `R·p + t`.
    #[inline]
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn as_homogeneous(&self) -> Matrix4<f64> {
        let mut h = Matrix4::identity();
        h.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        h.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        h
    }
}

pub(crate) fn check_rotation(r: &Matrix3<f64>) -> Result<(), GeomError> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(GeomError::NonFinite("rotation"));
    }
    let deviation = (r.transpose() * r - Matrix3::identity()).amax();
    if deviation > ORTHONORMAL_TOLERANCE {
        return Err(GeomError::NotOrthonormal { deviation });
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ORTHONORMAL_TOLERANCE {
        return Err(GeomError::ImproperRotation { det });
    }
    Ok(())
}

/// Geodesic angle (radians) between two rotations.
///
/// Uses `2·asin(‖A − B‖_F / 2√2)`, which keeps full precision for tiny
/// angles where the trace/acos form collapses.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let chord = (a - b).norm() / (2.0 * std::f64::consts::SQRT_2);
    2.0 * chord.min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};

    fn sample_pose() -> RigidPose {
        let axis = Unit::new_normalize(Vector3::new(0.3, -1.2, 0.7));
        let r = Rotation3::from_axis_angle(&axis, 1.1).into_inner();
        RigidPose::new(r, Vector3::new(12.0, -3.5, 40.25), PoseConvention::CameraToWorld).unwrap()
    }

    #[test]
    fn double_inverse_round_trips() {
        let p = sample_pose();
        let back = p.inverse().inverse();
        assert!((back.rotation() - p.rotation()).amax() <= 1e-12);
        assert!((back.translation() - p.translation()).amax() <= 1e-12);
        assert_eq!(back.convention(), p.convention());
    }

    #[test]
    fn camera_center_is_convention_independent() {
        let p = sample_pose();
        let c1 = p.camera_center();
        let c2 = p.inverse().camera_center();
        assert!((c1 - c2).norm() < 1e-12);
    }

    #[test]
    fn rejects_scaled_and_reflected_rotations() {
        let t = Vector3::zeros();
        let scaled = Matrix3::identity() * 1.001;
        assert!(matches!(
            RigidPose::new(scaled, t, PoseConvention::CameraToWorld),
            Err(GeomError::NotOrthonormal { .. })
        ));
        let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            RigidPose::new(mirror, t, PoseConvention::CameraToWorld),
            Err(GeomError::ImproperRotation { .. })
        ));
    }

    #[test]
    fn small_angles_keep_precision() {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), 3e-11).into_inner();
        let angle = rotation_angle_between(&Matrix3::identity(), &r);
        assert!((angle - 3e-11).abs() < 1e-20);
    }
}
