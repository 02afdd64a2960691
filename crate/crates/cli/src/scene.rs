//! Writes a synthetic scene in the same layout the real pipeline reads.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use islescale::ingest::{
    mask_file_name, write_intrinsics, write_mask, write_point_cloud, write_trajectory, IntrinsicsSet, PlyEncoding,
    TrajectoryDocument,
};
use islescale::synth::{generate_scene, Scene, SceneSpec};
use islescale::Execution;

use crate::commands::{create_dir, rotation_quaternion, write_json};
use crate::config::PipelineConfig;
use crate::error::CliError;

pub const PIPELINE_CONFIG: &str = "pipeline.json";
pub const TRUTH: &str = "truth.json";
pub const MASK_DIR: &str = "masks";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub scale: f64,
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

/// Ground truth for a generated scene. The first `island_point_count`
/// points of both clouds are island points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub truth_area_m2: f64,
    pub truth_perimeter_taxicab_m: f64,
    pub island_point_count: usize,
    pub sea_point_count: usize,
    pub frame_count: usize,
    pub seed: u64,
    /// Maps the reconstruction onto the truth.
    pub distortion: DistortionRecord,
}

pub fn load_spec(path: Option<&Path>) -> Result<SceneSpec, CliError> {
    let Some(path) = path else {
        return Ok(SceneSpec::default());
    };
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io { kind: "Io".into(), message: format!("{}: {e}", path.display()) })?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::validation("SpecInvalid", format!("{}: {e}", path.display())))
}

pub fn write_scene(scene: &Scene, dir: &Path) -> Result<TruthRecord, CliError> {
    create_dir(&dir.join(MASK_DIR))?;
    write_json(&dir.join("scene_spec.json"), &scene.spec)?;
    write_trajectory(&TrajectoryDocument::from_trajectory(&scene.recon_trajectory), dir.join("recon_trajectory.json"))?;
    write_trajectory(&TrajectoryDocument::from_trajectory(&scene.reference_trajectory), dir.join("reference_trajectory.json"))?;
    write_trajectory(&TrajectoryDocument::from_trajectory(&scene.truth_trajectory), dir.join("truth_trajectory.json"))?;
    write_point_cloud(&scene.recon_cloud, dir.join("recon_cloud.ply"), PlyEncoding::BinaryLittleEndian)?;
    write_point_cloud(&scene.truth_cloud, dir.join("truth_cloud.ply"), PlyEncoding::BinaryLittleEndian)?;
    write_intrinsics(&IntrinsicsSet::Shared(scene.intrinsics), dir.join("intrinsics.json"))?;
    for (frame, mask) in scene.truth_trajectory.frames().iter().zip(&scene.masks) {
        write_mask(mask, dir.join(MASK_DIR).join(mask_file_name(frame.frame_id, "png")))?;
    }

    let truth = TruthRecord {
        truth_area_m2: scene.truth_area_m2,
        truth_perimeter_taxicab_m: scene.truth_perimeter_taxicab_m,
        island_point_count: scene.island_count,
        sea_point_count: scene.sea_count(),
        frame_count: scene.truth_trajectory.len(),
        seed: scene.spec.seed,
        distortion: DistortionRecord {
            scale: scene.distortion.scale(),
            rotation: rotation_quaternion(&scene.distortion),
            translation: (*scene.distortion.translation()).into(),
        },
    };
    write_json(&dir.join(TRUTH), &truth)?;

    let config = PipelineConfig {
        recon_trajectory: Some(PathBuf::from("recon_trajectory.json")),
        reference_trajectory: Some(PathBuf::from("reference_trajectory.json")),
        point_cloud: Some(PathBuf::from("recon_cloud.ply")),
        mask_dir: Some(PathBuf::from(MASK_DIR)),
        intrinsics: Some(PathBuf::from("intrinsics.json")),
        output_dir: Some(PathBuf::from("out")),
        ground_truth_area_m2: Some(scene.truth_area_m2),
        ..PipelineConfig::default()
    };
    write_json(&dir.join(PIPELINE_CONFIG), &config)?;
    Ok(truth)
}

/// Generates a scene from `spec` (seed replaced by `seed` when given) into `out`.
pub fn run_synth(mut spec: SceneSpec, seed: Option<u64>, out: &Path) -> Result<TruthRecord, CliError> {
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let scene = generate_scene(&spec, Execution::default())?;
    write_scene(&scene, out)
}
