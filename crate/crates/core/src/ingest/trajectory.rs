use std::fmt;
use std::path::Path;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{read_bytes, write_bytes, IngestError};
use crate::geom::{PoseConvention, RigidPose, Trajectory};

/// Unit-norm tolerance for stored quaternions.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordinateFrame {
    LocalMetric,
    Geodetic,
}

impl fmt::Display for CoordinateFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoordinateFrame::LocalMetric => "local-metric",
            CoordinateFrame::Geodetic => "geodetic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: i64,
    /// Meters, or `[latitude_deg, longitude_deg, altitude_m]` for geodetic documents.
    pub position: [f64; 3],
    /// Camera-to-world unit quaternion `[w, x, y, z]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<[f64; 4]>,
}

/// The canonical trajectory file.
///
/// ```json
/// {"coordinate_frame": "local-metric",
///  "frames": [{"frame_id": 0, "position": [1.0, 2.0, 3.0], "orientation": [1, 0, 0, 0]}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDocument {
    pub coordinate_frame: CoordinateFrame,
    pub frames: Vec<FrameRecord>,
}

impl TrajectoryDocument {
    pub fn validate(&self) -> Result<(), IngestError> {
        for (index, frame) in self.frames.iter().enumerate() {
            if index > 0 && frame.frame_id <= self.frames[index - 1].frame_id {
                return Err(IngestError::DuplicateFrameId { index, frame_id: frame.frame_id });
            }
            if !frame.position.iter().all(|v| v.is_finite()) {
                return Err(IngestError::schema(format!("frames[{index}].position"), "non-finite value"));
            }
            if let Some(q) = frame.orientation {
                let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !((norm - 1.0).abs() <= QUATERNION_NORM_TOLERANCE) {
                    return Err(IngestError::schema(
                        format!("frames[{index}].orientation"),
                        format!("quaternion norm {norm} is not 1"),
                    ));
                }
            }
            if self.coordinate_frame == CoordinateFrame::Geodetic {
                let [lat, lon, _] = frame.position;
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(IngestError::schema(format!("frames[{index}].position[0]"), "latitude outside [-90, 90]"));
                }
                if !(-180.0..=180.0).contains(&lon) {
                    return Err(IngestError::schema(
                        format!("frames[{index}].position[1]"),
                        "longitude outside [-180, 180]",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn has_orientations(&self) -> bool {
        self.frames.iter().all(|f| f.orientation.is_some())
    }

    /// Camera-to-world trajectory; frames without an orientation get the identity rotation.
    pub fn to_trajectory(&self) -> Result<Trajectory, IngestError> {
        if self.coordinate_frame != CoordinateFrame::LocalMetric {
            return Err(IngestError::WrongFrame {
                expected: CoordinateFrame::LocalMetric,
                got: self.coordinate_frame,
            });
        }
        let mut frames = Vec::with_capacity(self.frames.len());
        for (index, f) in self.frames.iter().enumerate() {
            let rotation = match f.orientation {
                Some([w, x, y, z]) => {
                    UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)).to_rotation_matrix().into_inner()
                }
                None => nalgebra::Matrix3::identity(),
            };
            let pose = RigidPose::new(rotation, Vector3::from(f.position), PoseConvention::CameraToWorld)
                .map_err(|e| IngestError::schema(format!("frames[{index}]"), e.to_string()))?;
            frames.push((f.frame_id, pose));
        }
        Trajectory::new(frames).map_err(|e| IngestError::schema("frames", e.to_string()))
    }

    /// Local-metric document holding camera centers and camera-to-world orientations.
    pub fn from_trajectory(trajectory: &Trajectory) -> Self {
        let frames = trajectory
            .frames()
            .iter()
            .map(|f| {
                let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*f.pose.rotation()));
                let mut wxyz = [q.w, q.i, q.j, q.k];
                if wxyz[0] < 0.0 {
                    wxyz.iter_mut().for_each(|v| *v = -*v);
                }
                FrameRecord {
                    frame_id: f.frame_id,
                    position: f.pose.camera_center().coords.into(),
                    orientation: Some(wxyz),
                }
            })
            .collect();
        Self { coordinate_frame: CoordinateFrame::LocalMetric, frames }
    }
}

pub fn parse_trajectory(bytes: &[u8]) -> Result<TrajectoryDocument, IngestError> {
    let doc: TrajectoryDocument = serde_json::from_slice(bytes).map_err(|e| IngestError::Schema {
        field: schema_field(&e.to_string()),
        message: e.to_string(),
    })?;
    doc.validate()?;
    Ok(doc)
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<TrajectoryDocument, IngestError> {
    parse_trajectory(&read_bytes(path.as_ref())?)
}

pub fn write_trajectory(doc: &TrajectoryDocument, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let mut json = serde_json::to_vec_pretty(doc).expect("trajectory documents always serialize");
    json.push(b'\n');
    write_bytes(path.as_ref(), &json)
}

/// Pulls the field name out of serde's "missing field `x`" / "unknown variant" messages.
fn schema_field(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .filter(|_| message.contains("field"))
        .unwrap_or("document")
        .to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_local_document() {
        let json = br#"{"coordinate_frame": "local-metric", "frames": [
            {"frame_id": 0, "position": [0, 0, 0]},
            {"frame_id": 1, "position": [1, 0, 0]},
            {"frame_id": 2, "position": [2, 0, 0]}]}"#;
        let doc = parse_trajectory(json).unwrap();
        assert_eq!(doc.coordinate_frame, CoordinateFrame::LocalMetric);
        assert!(doc.frames.iter().all(|f| f.orientation.is_none()));
        assert!(!doc.has_orientations());
        assert_eq!(doc.to_trajectory().unwrap().len(), 3);
    }

    #[test]
    fn out_of_order_ids_rejected() {
        let json = br#"{"coordinate_frame": "local-metric", "frames": [
            {"frame_id": 0, "position": [0, 0, 0]},
            {"frame_id": 2, "position": [1, 0, 0]},
            {"frame_id": 1, "position": [2, 0, 0]}]}"#;
        assert!(matches!(
            parse_trajectory(json),
            Err(IngestError::DuplicateFrameId { index: 2, frame_id: 1 })
        ));
    }

    #[test]
    fn geodetic_fixture() {
        let json = br#"{"coordinate_frame": "geodetic", "frames": [
            {"frame_id": 10, "position": [40.6892, -74.0445, 300.0], "orientation": [1, 0, 0, 0]},
            {"frame_id": 11, "position": [40.6895, -74.0440, 305.0], "orientation": [0, 1, 0, 0]},
            {"frame_id": 12, "position": [40.6898, -74.0435, 310.0], "orientation": [0, 0, 1, 0]},
            {"frame_id": 13, "position": [40.6901, -74.0430, 315.0], "orientation": [0, 0, 0, 1]}]}"#;
        let doc = parse_trajectory(json).unwrap();
        assert_eq!(doc.coordinate_frame, CoordinateFrame::Geodetic);
        assert_eq!(doc.frames.len(), 4);
        assert!(matches!(doc.to_trajectory(), Err(IngestError::WrongFrame { .. })));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let json = br#"{"coordinate_frame": "local-metric", "frames": [{"position": [0, 0, 0]}]}"#;
        match parse_trajectory(json) {
            Err(IngestError::Schema { field, .. }) => assert_eq!(field, "frame_id"),
            other => panic!("unexpected {other:?}"),
        }
        let json = br#"{"coordinate_frame": "local-metric", "frames": [{"frame_id": 0, "position": [0, 0, 0], "orientation": [2, 0, 0, 0]}]}"#;
        match parse_trajectory(json) {
            Err(IngestError::Schema { field, .. }) => assert_eq!(field, "frames[0].orientation"),
            other => panic!("unexpected {other:?}"),
        }
        let json = br#"{"coordinate_frame": "geodetic", "frames": [{"frame_id": 0, "position": [91, 0, 0]}]}"#;
        assert!(matches!(parse_trajectory(json), Err(IngestError::Schema { .. })));
    }

    #[test]
    fn trajectory_round_trip_through_document() {
        let axis = nalgebra::Unit::new_normalize(Vector3::new(0.2, 1.0, -0.3));
        let r = Rotation3::from_axis_angle(&axis, 2.9).into_inner();
        let pose = RigidPose::new(r, Vector3::new(4.0, 5.0, 6.0), PoseConvention::CameraToWorld).unwrap();
        let traj = Trajectory::new([(3, pose)]).unwrap();
        let doc = TrajectoryDocument::from_trajectory(&traj);
        let back = doc.to_trajectory().unwrap();
        assert!((back.frames()[0].pose.rotation() - r).amax() < 1e-12);
        assert_eq!(back.camera_centers()[0], traj.camera_centers()[0]);
    }
}
