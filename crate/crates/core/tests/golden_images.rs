//! Byte-level regression tests for rendered images.
//!
//! Run with `ISLESCALE_BLESS=1` to rewrite the files under `tests/golden`
//! after an intentional change, then inspect them before committing.

use std::path::PathBuf;

use islescale::backproject::{label_points_with, LabelingConfig, ViewFrame};
use islescale::footprint::{footprint_image, height_map, measure, GeoImage};
use islescale::geom::{apply_sim3_to_points, apply_sim3_to_pose, umeyama_align};
use islescale::ingest::encode_pgm;
use islescale::synth::{generate_scene, SceneSpec};
use islescale::Execution;

fn measured(spec: &SceneSpec) -> islescale::footprint::Measurement {
    let scene = generate_scene(spec, Execution::Parallel).unwrap();
    let fit = umeyama_align(&scene.recon_trajectory.camera_centers(), &scene.reference_trajectory.camera_centers()).unwrap();
    let cloud = apply_sim3_to_points(&scene.recon_cloud, &fit.transform);
    let views: Vec<_> = scene
        .recon_trajectory
        .frames()
        .iter()
        .zip(&scene.masks)
        .map(|(f, m)| ViewFrame::new(f.frame_id, apply_sim3_to_pose(&f.pose, &fit.transform), scene.intrinsics, m.clone()).unwrap())
        .collect();
    let out = label_points_with(&cloud, &views, &LabelingConfig::default(), Execution::Parallel).unwrap();
    measure(&cloud.select(&out.island), Some(1.0), None, Execution::Parallel).unwrap()
}

fn check(name: &str, image: &GeoImage) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let bytes = encode_pgm(&image.image);
    if std::env::var_os("ISLESCALE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &bytes).unwrap();
    }
    let golden = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(golden == bytes, "{name} differs from its golden file");
}

#[test]
fn cone_height_map() {
    let m = measured(&SceneSpec::cone_disk(100.0, 20.0));
    check("cone_height_map.pgm", &height_map(&m.grid).unwrap());
}

#[test]
fn rectangle_footprint() {
    let m = measured(&SceneSpec::rectangle(200.0, 300.0));
    check("rectangle_footprint.pgm", &footprint_image(&m.grid).unwrap());
}
