use nalgebra::Vector3;

use super::{CoordinateFrame, FrameRecord, IngestError, TrajectoryDocument};

/// WGS84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 inverse flattening.
pub const WGS84_INV_F: f64 = 298.257_223_563;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GeodeticPoint {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GeodeticPoint {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Self {
        Self { latitude_deg, longitude_deg, altitude_m }
    }
}

/// Earth-centered Earth-fixed coordinates on the WGS84 ellipsoid.
pub fn geodetic_to_ecef(p: &GeodeticPoint) -> Vector3<f64> {
    let f = 1.0 / WGS84_INV_F;
    let e2 = f * (2.0 - f);
    let (sin_lat, cos_lat) = p.latitude_deg.to_radians().sin_cos();
    let (sin_lon, cos_lon) = p.longitude_deg.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - e2 * sin_lat * sin_lat).sqrt();
    let h = p.altitude_m;
    Vector3::new(
        (n + h) * cos_lat * cos_lon,
        (n + h) * cos_lat * sin_lon,
        (n * (1.0 - e2) + h) * sin_lat,
    )
}

/// East-North-Up offset of `ecef` in the tangent plane at `origin`.
pub fn ecef_to_enu(ecef: &Vector3<f64>, origin: &GeodeticPoint) -> Vector3<f64> {
    let d = ecef - geodetic_to_ecef(origin);
    let (sin_lat, cos_lat) = origin.latitude_deg.to_radians().sin_cos();
    let (sin_lon, cos_lon) = origin.longitude_deg.to_radians().sin_cos();
    Vector3::new(
        -sin_lon * d.x + cos_lon * d.y,
        -sin_lat * cos_lon * d.x - sin_lat * sin_lon * d.y + cos_lat * d.z,
        cos_lat * cos_lon * d.x + cos_lat * sin_lon * d.y + sin_lat * d.z,
    )
}

/// Converts a geodetic trajectory to local ENU meters.
///
/// `origin` defaults to the first frame's position. Orientations are passed
/// through unchanged and are taken to be expressed in the ENU frame.
pub fn geodetic_to_local(
    doc: &TrajectoryDocument,
    origin: Option<GeodeticPoint>,
) -> Result<TrajectoryDocument, IngestError> {
    if doc.coordinate_frame != CoordinateFrame::Geodetic {
        return Err(IngestError::WrongFrame { expected: CoordinateFrame::Geodetic, got: doc.coordinate_frame });
    }
    let origin = match origin.or_else(|| doc.frames.first().map(frame_point)) {
        Some(o) => o,
        None => return Ok(TrajectoryDocument { coordinate_frame: CoordinateFrame::LocalMetric, frames: vec![] }),
    };
    let frames = doc
        .frames
        .iter()
        .map(|f| FrameRecord {
            frame_id: f.frame_id,
            position: ecef_to_enu(&geodetic_to_ecef(&frame_point(f)), &origin).into(),
            orientation: f.orientation,
        })
        .collect();
    Ok(TrajectoryDocument { coordinate_frame: CoordinateFrame::LocalMetric, frames })
}

fn frame_point(f: &FrameRecord) -> GeodeticPoint {
    GeodeticPoint::new(f.position[0], f.position[1], f.position[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enu(p: GeodeticPoint, o: GeodeticPoint) -> Vector3<f64> {
        ecef_to_enu(&geodetic_to_ecef(&p), &o)
    }

    #[test]
    fn origin_maps_to_zero() {
        let o = GeodeticPoint::new(40.6892, -74.0445, 3.0);
        assert!(enu(o, o).norm() < 1e-6);
    }

    #[test]
    fn pure_altitude_is_up() {
        let o = GeodeticPoint::new(40.69, -74.045, 0.0);
        let v = enu(GeodeticPoint::new(40.69, -74.045, 100.0), o);
        assert!((v - Vector3::new(0.0, 0.0, 100.0)).norm() < 1e-3);
    }

    // Expected values from an independent 40-digit ECEF-difference evaluation.
    #[test]
    fn millidegree_north_of_equator() {
        let v = enu(GeodeticPoint::new(0.001, 0.0, 0.0), GeodeticPoint::new(0.0, 0.0, 0.0));
        assert!(v.x.abs() < 1e-9);
        assert!((v.y - 110.574_275_816_093_3).abs() < 1e-6);
        assert!((v.z - -0.000_964_942_590_524_6).abs() < 1e-8);
    }

    #[test]
    fn offsets_near_liberty_and_sydney() {
        let v = enu(GeodeticPoint::new(40.6895, -74.0440, 12.5), GeodeticPoint::new(40.6892, -74.0445, 3.0));
        let want = Vector3::new(42.264_471_172_998_13, 33.314_558_125_098_38, 9.499_772_950_099_328);
        assert!((v - want).norm() < 1e-6, "{v:?}");
        let v = enu(GeodeticPoint::new(-33.86, 151.21, 50.0), GeodeticPoint::new(-33.8688, 151.2093, 20.0));
        let want = Vector3::new(64.775_756_465_636_59, 976.102_919_453_585_8, 29.924_712_127_910_27);
        assert!((v - want).norm() < 1e-6, "{v:?}");
    }

    #[test]
    fn document_conversion_defaults_origin_to_first_frame() {
        let doc = TrajectoryDocument {
            coordinate_frame: CoordinateFrame::Geodetic,
            frames: vec![
                FrameRecord { frame_id: 0, position: [10.0, 20.0, 5.0], orientation: None },
                FrameRecord { frame_id: 1, position: [10.0, 20.0, 15.0], orientation: Some([1.0, 0.0, 0.0, 0.0]) },
            ],
        };
        let local = geodetic_to_local(&doc, None).unwrap();
        assert_eq!(local.coordinate_frame, CoordinateFrame::LocalMetric);
        assert!(Vector3::from(local.frames[0].position).norm() < 1e-6);
        assert!((local.frames[1].position[2] - 10.0).abs() < 1e-6);
        assert_eq!(local.frames[1].orientation, Some([1.0, 0.0, 0.0, 0.0]));
        assert!(matches!(geodetic_to_local(&local, None), Err(IngestError::WrongFrame { .. })));
    }
}
