use std::fs;
use std::path::Path;

use nalgebra::{Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use islescale::backproject::{label_points_with, ViewFrame};
use islescale::footprint::{footprint_image, height_map, measure, relative_error, MeasurementReport};
use islescale::geom::{alignment_rmse, apply_sim3_to_points, apply_sim3_to_pose, umeyama_align, Sim3Transform, Trajectory};
use islescale::ingest::{
    geodetic_to_local, locate_mask, read_intrinsics, read_mask, read_point_cloud, read_trajectory, write_grayscale,
    write_point_cloud, CoordinateFrame, IntrinsicsSet, PlyEncoding, TrajectoryDocument,
};
use islescale::Execution;

use crate::config::*;
use crate::error::CliError;

/// Non-fatal conditions reported on stderr.
pub type Warnings = Vec<String>;

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| CliError::Io { kind: "Io".into(), message: format!("{}: {e}", path.display()) })
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io { kind: "Io".into(), message: format!("{}: {e}", path.display()) })
}

/// `[w, x, y, z]` with `w ≥ 0`.
pub fn rotation_quaternion(sim: &Sim3Transform) -> [f64; 4] {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*sim.rotation()));
    let sign = if q.w < 0.0 { -1.0 } else { 1.0 };
    [sign * q.w, sign * q.i, sign * q.j, sign * q.k]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub scale: f64,
    /// `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
    pub rmse_m: f64,
    pub n_frames: usize,
}

fn local_trajectory(doc: TrajectoryDocument, cfg: &PipelineConfig) -> Result<Trajectory, CliError> {
    let doc = match doc.coordinate_frame {
        CoordinateFrame::Geodetic => geodetic_to_local(&doc, cfg.enu_origin)?,
        CoordinateFrame::LocalMetric => doc,
    };
    Ok(doc.to_trajectory()?)
}

/// Fits the reconstruction to the reference and rescales cloud and trajectory.
pub fn run_align(cfg: &PipelineConfig, warnings: &mut Warnings) -> Result<AlignmentReport, CliError> {
    let recon_path = PipelineConfig::require(&cfg.recon_trajectory, "recon_trajectory")?;
    let reference_path = PipelineConfig::require(&cfg.reference_trajectory, "reference_trajectory")?;
    let cloud_path = PipelineConfig::require(&cfg.point_cloud, "point_cloud")?;
    let out = cfg.output_dir()?;

    let recon_doc = read_trajectory(recon_path)?;
    if recon_doc.coordinate_frame != CoordinateFrame::LocalMetric {
        return Err(CliError::validation("WrongFrame", "recon_trajectory must be local-metric"));
    }
    let recon = recon_doc.to_trajectory()?;
    let reference = local_trajectory(read_trajectory(reference_path)?, cfg)?;
    recon.check_matches(&reference)?;
    let cloud = read_point_cloud(cloud_path)?;

    let fit = umeyama_align(&recon.camera_centers(), &reference.camera_centers())?;
    if fit.rank_deficient {
        warnings.push("camera centers are nearly collinear; the recovered rotation is not unique".into());
    }
    let sim = fit.transform;
    let scaled = Trajectory::new(recon.frames().iter().map(|f| (f.frame_id, apply_sim3_to_pose(&f.pose, &sim))))?;
    let report = AlignmentReport {
        scale: sim.scale(),
        rotation: rotation_quaternion(&sim),
        translation: (*sim.translation()).into(),
        rmse_m: alignment_rmse(&recon, &reference, &sim)?,
        n_frames: recon.len(),
    };

    create_dir(out)?;
    write_point_cloud(&apply_sim3_to_points(&cloud, &sim), out.join(SCALED_CLOUD), PlyEncoding::BinaryLittleEndian)?;
    islescale::ingest::write_trajectory(&TrajectoryDocument::from_trajectory(&scaled), out.join(SCALED_TRAJECTORY))?;
    write_json(&out.join(ALIGNMENT_REPORT), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub n_points: usize,
    pub n_island: usize,
    pub n_views: usize,
    pub min_votes: u32,
}

/// Loads one view per frame of the scaled trajectory.
fn load_views(cfg: &PipelineConfig, trajectory: &Trajectory) -> Result<Vec<ViewFrame>, CliError> {
    let mask_dir = PipelineConfig::require(&cfg.mask_dir, "mask_dir")?;
    let intrinsics = read_intrinsics(PipelineConfig::require(&cfg.intrinsics, "intrinsics")?)?;
    if let IntrinsicsSet::PerFrame(list) = &intrinsics {
        if list.len() != trajectory.len() {
            return Err(CliError::validation(
                "IntrinsicsCount",
                format!("{} intrinsics records for {} frames", list.len(), trajectory.len()),
            ));
        }
    }
    trajectory
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let id = f.frame_id;
            let path = locate_mask(mask_dir, id)
                .ok_or_else(|| CliError::for_frame(id, "MissingMask", format!("no mask for frame {id} in {}", mask_dir.display())))?;
            let mask = read_mask(&path).map_err(|e| match CliError::from(e) {
                CliError::Validation { kind, message, .. } => CliError::for_frame(id, &kind, format!("frame {id}: {message}")),
                other => other,
            })?;
            let k = *intrinsics.get(i).expect("count checked");
            ViewFrame::new(id, f.pose, k, mask).map_err(|e| {
                let kind = CliError::from(e.clone()).kind().to_string();
                CliError::for_frame(id, &kind, e.to_string())
            })
        })
        .collect()
}

/// Votes every point of the scaled cloud against the masks.
pub fn run_label(cfg: &PipelineConfig, warnings: &mut Warnings) -> Result<LabelSummary, CliError> {
    let cloud_path = cfg.scaled_cloud_path()?;
    let trajectory_path = cfg.scaled_trajectory_path()?;
    let out = cfg.output_dir()?;
    let trajectory = read_trajectory(&trajectory_path)?.to_trajectory()?;
    let cloud = read_point_cloud(&cloud_path)?.without_votes();
    let views = load_views(cfg, &trajectory)?;

    let labeling = cfg.labeling;
    if labeling.min_votes as usize > views.len() {
        warnings.push(format!(
            "min_votes {} exceeds the {} available views; the island will be empty",
            labeling.min_votes,
            views.len()
        ));
    }
    let outcome = label_points_with(&cloud, &views, &labeling, Execution::default())?;
    create_dir(out)?;
    write_point_cloud(&outcome.cloud, out.join(VOTED_CLOUD), PlyEncoding::BinaryLittleEndian)?;
    write_point_cloud(&outcome.cloud.select(&outcome.island), out.join(ISLAND_CLOUD), PlyEncoding::BinaryLittleEndian)?;
    Ok(LabelSummary {
        n_points: cloud.len(),
        n_island: outcome.island.len(),
        n_views: views.len(),
        min_votes: labeling.min_votes,
    })
}

/// Rasterizes the island cloud and writes the report and both images.
pub fn run_measure(cfg: &PipelineConfig) -> Result<MeasurementReport, CliError> {
    let island_path = cfg.island_cloud_path()?;
    let out = cfg.output_dir()?;
    let cloud = read_point_cloud(&island_path)?;
    let m = measure(&cloud, cfg.cell_size, cfg.ground_truth_area_m2, Execution::default())?;
    create_dir(out)?;
    write_json(&out.join(MEASUREMENT_REPORT), &m.report)?;
    write_grayscale(&footprint_image(&m.grid)?.image, out.join(FOOTPRINT_IMAGE))?;
    write_grayscale(&height_map(&m.grid)?.image, out.join(HEIGHT_MAP_IMAGE))?;
    Ok(m.report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub alignment: AlignmentReport,
    pub labeling: LabelSummary,
    pub measurement: MeasurementReport,
}

/// `align → label → measure`, each stage reading the previous one's files.
pub fn run_pipeline(cfg: &PipelineConfig, warnings: &mut Warnings) -> Result<PipelineSummary, CliError> {
    let mut cfg = cfg.clone();
    cfg.scaled_cloud = None;
    cfg.scaled_trajectory = None;
    cfg.island_cloud = None;
    let alignment = run_align(&cfg, warnings)?;
    let labeling = run_label(&cfg, warnings)?;
    let measurement = run_measure(&cfg)?;
    Ok(PipelineSummary { alignment, labeling, measurement })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub name: String,
    pub estimate_m2: f64,
    pub ground_truth_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvalManifest {
    List(Vec<EvalEntry>),
    Wrapped { entries: Vec<EvalEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub name: String,
    pub estimate_m2: f64,
    pub ground_truth_m2: f64,
    pub relative_error_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub entries: Vec<EvalRow>,
    pub mean_absolute_error_percent: f64,
}

pub fn evaluate(entries: &[EvalEntry]) -> Result<EvalReport, CliError> {
    let rows = entries
        .iter()
        .map(|e| {
            let re = relative_error(e.estimate_m2, e.ground_truth_m2)
                .map_err(|err| CliError::validation("NonPositiveGroundTruth", format!("{}: {err}", e.name)))?;
            Ok(EvalRow {
                name: e.name.clone(),
                estimate_m2: e.estimate_m2,
                ground_truth_m2: e.ground_truth_m2,
                relative_error_percent: re,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mean = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.relative_error_percent.abs()).sum::<f64>() / rows.len() as f64
    };
    Ok(EvalReport { entries: rows, mean_absolute_error_percent: mean })
}

pub fn run_eval(manifest: &Path, out: Option<&Path>) -> Result<EvalReport, CliError> {
    let bytes = fs::read(manifest)
        .map_err(|e| CliError::Io { kind: "Io".into(), message: format!("{}: {e}", manifest.display()) })?;
    let parsed: EvalManifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::validation("ManifestInvalid", format!("{}: {e}", manifest.display())))?;
    let entries = match parsed {
        EvalManifest::List(v) | EvalManifest::Wrapped { entries: v } => v,
    };
    let report = evaluate(&entries)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("eval_report.json"), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_rows() {
        let entries = vec![
            EvalEntry { name: "a".into(), estimate_m2: 110.0, ground_truth_m2: 100.0 },
            EvalEntry { name: "b".into(), estimate_m2: 80.0, ground_truth_m2: 100.0 },
        ];
        let r = evaluate(&entries).unwrap();
        assert!((r.entries[0].relative_error_percent - 10.0).abs() < 1e-12);
        assert!((r.mean_absolute_error_percent - 15.0).abs() < 1e-12);
        let bad = vec![EvalEntry { name: "z".into(), estimate_m2: 1.0, ground_truth_m2: 0.0 }];
        assert_eq!(evaluate(&bad).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn manifest_shapes() {
        let a: EvalManifest = serde_json::from_str(r#"[{"name":"x","estimate_m2":1,"ground_truth_m2":2}]"#).unwrap();
        let b: EvalManifest =
            serde_json::from_str(r#"{"entries":[{"name":"x","estimate_m2":1,"ground_truth_m2":2}]}"#).unwrap();
        assert!(matches!(a, EvalManifest::List(ref v) if v.len() == 1));
        assert!(matches!(b, EvalManifest::Wrapped { ref entries } if entries.len() == 1));
    }

    #[test]
    fn identity_quaternion() {
        assert_eq!(rotation_quaternion(&Sim3Transform::identity()), [1.0, 0.0, 0.0, 0.0]);
    }
}
