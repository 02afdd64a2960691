use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use islescale::backproject::LabelingConfig;
use islescale::ingest::GeodeticPoint;

use crate::error::CliError;

pub const SCALED_CLOUD: &str = "scaled_cloud.ply";
pub const SCALED_TRAJECTORY: &str = "scaled_trajectory.json";
pub const ALIGNMENT_REPORT: &str = "alignment_report.json";
pub const VOTED_CLOUD: &str = "voted_cloud.ply";
pub const ISLAND_CLOUD: &str = "island_cloud.ply";
pub const MEASUREMENT_REPORT: &str = "measurement.json";
pub const FOOTPRINT_IMAGE: &str = "footprint.png";
pub const HEIGHT_MAP_IMAGE: &str = "height_map.png";

/// One JSON file describing a run. Relative paths resolve against the
/// directory holding the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_cloud: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub labeling: LabelingConfig,
    /// Fixed grid cell size in meters, replacing the adaptive one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_size: Option<f64>,
    /// ENU origin for a geodetic reference; defaults to its first frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enu_origin: Option<GeodeticPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_area_m2: Option<f64>,
    /// Inputs of `label` and `measure`; default to the earlier stage's output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_cloud: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub island_cloud: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub min_votes: Option<u32>,
    pub depth_tolerance: Option<f64>,
    pub cell_size: Option<f64>,
    pub out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io { kind: "Io".into(), message: format!("{}: {e}", path.display()) })?;
        let mut cfg: PipelineConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::validation("ConfigInvalid", format!("{}: {e}", path.display())))?;
        cfg.resolve_relative_to(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        for p in [
            &mut self.recon_trajectory,
            &mut self.reference_trajectory,
            &mut self.point_cloud,
            &mut self.mask_dir,
            &mut self.intrinsics,
            &mut self.output_dir,
            &mut self.scaled_cloud,
            &mut self.scaled_trajectory,
            &mut self.island_cloud,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(v) = o.min_votes {
            self.labeling.min_votes = v;
        }
        if let Some(v) = o.depth_tolerance {
            self.labeling.depth_tolerance = v;
        }
        if let Some(v) = o.cell_size {
            self.cell_size = Some(v);
        }
        if let Some(v) = &o.out {
            self.output_dir = Some(v.clone());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.labeling.validate()?;
        if let Some(s) = self.cell_size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(CliError::validation("ConfigInvalid", format!("cell_size must be positive, got {s}")));
            }
        }
        if let Some(a) = self.ground_truth_area_m2 {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CliError::validation("ConfigInvalid", format!("ground_truth_area_m2 must be positive, got {a}")));
            }
        }
        Ok(())
    }

    pub fn require<'a>(value: &'a Option<PathBuf>, key: &'static str) -> Result<&'a Path, CliError> {
        value.as_deref().ok_or(CliError::MissingKey(key))
    }

    pub fn output_dir(&self) -> Result<&Path, CliError> {
        Self::require(&self.output_dir, "output_dir")
    }

    fn stage_input(&self, explicit: &Option<PathBuf>, key: &'static str, default_name: &str) -> Result<PathBuf, CliError> {
        match explicit {
            Some(p) => Ok(p.clone()),
            None => self.output_dir().map(|d| d.join(default_name)).map_err(|_| CliError::MissingKey(key)),
        }
    }

    pub fn scaled_cloud_path(&self) -> Result<PathBuf, CliError> {
        self.stage_input(&self.scaled_cloud, "scaled_cloud", SCALED_CLOUD)
    }

    pub fn scaled_trajectory_path(&self) -> Result<PathBuf, CliError> {
        self.stage_input(&self.scaled_trajectory, "scaled_trajectory", SCALED_TRAJECTORY)
    }

    pub fn island_cloud_path(&self) -> Result<PathBuf, CliError> {
        self.stage_input(&self.island_cloud, "island_cloud", ISLAND_CLOUD)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let mut cfg: PipelineConfig =
            serde_json::from_str(r#"{"point_cloud": "cloud.ply", "output_dir": "/abs/out"}"#).unwrap();
        cfg.resolve_relative_to(Path::new("/data/run"));
        assert_eq!(cfg.point_cloud.as_deref(), Some(Path::new("/data/run/cloud.ply")));
        assert_eq!(cfg.output_dir.as_deref(), Some(Path::new("/abs/out")));
        assert_eq!(cfg.island_cloud_path().unwrap(), Path::new("/abs/out/island_cloud.ply"));
    }

    #[test]
    fn flags_win() {
        let mut cfg: PipelineConfig = serde_json::from_str(r#"{"labeling": {"min_votes": 5}, "cell_size": 2.0}"#).unwrap();
        assert_eq!(cfg.labeling.depth_tolerance, 2.0);
        cfg.apply(&Overrides { min_votes: Some(1), cell_size: Some(0.5), ..Default::default() }).unwrap();
        assert_eq!((cfg.labeling.min_votes, cfg.cell_size), (1, Some(0.5)));
        assert!(cfg.apply(&Overrides { cell_size: Some(-1.0), ..Default::default() }).is_err());
    }

    #[test]
    fn missing_key_is_named() {
        let cfg = PipelineConfig::default();
        assert!(matches!(cfg.output_dir(), Err(CliError::MissingKey("output_dir"))));
        assert!(matches!(cfg.scaled_cloud_path(), Err(CliError::MissingKey("scaled_cloud"))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"mask_directory": "m"}"#).is_err());
    }
}
