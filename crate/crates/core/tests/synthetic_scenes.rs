use nalgebra::Point3;

use islescale::backproject::{label_points_with, project_to_pixel, LabelingConfig};
use islescale::geom::{rotation_angle_between, umeyama_align, PointCloud};
use islescale::ingest::IntrinsicsRecord;
use islescale::synth::{generate_scene, perturb, Distortion, IslandShape, Scene, SceneSpec};
use islescale::Execution;

fn reduced(mut spec: SceneSpec) -> SceneSpec {
    spec.point_spacing = 1.0;
    spec.orbit.frame_count = 12;
    spec.intrinsics = IntrinsicsRecord { fx: 350.0, fy: 350.0, cx: 200.0, cy: 150.0, width: 400, height: 300 };
    spec
}

fn l_shape() -> SceneSpec {
    let vertices = vec![[-60.0, -60.0], [60.0, -60.0], [60.0, 0.0], [0.0, 0.0], [0.0, 60.0], [-60.0, 60.0]];
    SceneSpec { island_shape: IslandShape::Polygon { vertices }, ..SceneSpec::default() }
}

fn scenes() -> Vec<Scene> {
    [SceneSpec::rectangle(200.0, 300.0), SceneSpec::cone_disk(100.0, 20.0), l_shape()]
        .into_iter()
        .enumerate()
        .map(|(i, s)| generate_scene(&reduced(SceneSpec { seed: i as u64 + 1, ..s }), Execution::Parallel).unwrap())
        .collect()
}

#[test]
fn truth_values() {
    let s = scenes();
    assert_eq!(s[0].truth_area_m2, 60_000.0);
    assert_eq!(s[1].truth_perimeter_taxicab_m, 800.0);
    assert!((s[1].truth_area_m2 - std::f64::consts::PI * 1e4).abs() < 1e-9);
    assert_eq!((s[2].truth_area_m2, s[2].truth_perimeter_taxicab_m), (10_800.0, 480.0));
}

#[test]
fn alignment_recovers_the_distortion() {
    for seed in 0..10 {
        let spec = SceneSpec { seed, ..reduced(SceneSpec::default()) };
        let scene = generate_scene(&spec, Execution::Parallel).unwrap();
        let fit = umeyama_align(&scene.recon_trajectory.camera_centers(), &scene.truth_trajectory.camera_centers()).unwrap();
        let (got, want) = (fit.transform, scene.distortion);
        assert!((got.scale() - want.scale()).abs() / want.scale() < 1e-9, "seed {seed}");
        assert!(rotation_angle_between(got.rotation(), want.rotation()) < 1e-9);
        assert!((got.translation() - want.translation()).norm() < 1e-9 * (1.0 + want.translation().norm()));
    }
}

#[test]
fn fixed_distortion_is_used_verbatim() {
    let spec = SceneSpec {
        distortion: Distortion::Fixed { scale: 0.137, rotation: [1.0, 0.0, 0.0, 0.0], translation: [5.0, -2.0, 1.0] },
        ..reduced(SceneSpec::default())
    };
    let scene = generate_scene(&spec, Execution::Sequential).unwrap();
    assert_eq!(scene.distortion.scale(), 0.137);
    let p = scene.recon_cloud.positions()[0];
    let q = scene.distortion.transform_point(&p);
    assert!((q - scene.truth_cloud.positions()[0]).norm() < 1e-9);
}

#[test]
fn masks_contain_every_island_point() {
    for scene in scenes() {
        for (frame, mask) in scene.truth_trajectory.frames().iter().zip(&scene.masks) {
            let w2c = frame.pose.to_world_to_camera();
            for p in &scene.truth_cloud.positions()[..scene.island_count] {
                if let Some(px) = project_to_pixel(&w2c.transform_point(p), &scene.intrinsics, 0.1) {
                    assert!(mask.get(px.u, px.v).unwrap(), "frame {} point {p}", frame.frame_id);
                }
            }
        }
    }
}

#[test]
fn sea_never_votes() {
    for scene in scenes() {
        let out = label_points_with(&scene.truth_cloud, &scene.views(), &LabelingConfig::union(), Execution::Parallel).unwrap();
        let votes = out.cloud.votes().unwrap();
        let bad: Vec<_> = (scene.island_count..votes.len()).filter(|&i| votes[i] > 0).map(|i| (scene.truth_cloud.positions()[i], votes[i])).take(5).collect();
        assert!(bad.is_empty(), "{:?} {bad:?}", scene.spec.island_shape);
        assert!(scene.sea_count() > 100);
        assert!(votes[..scene.island_count].iter().all(|&v| v > 0));
    }
}

#[test]
fn generation_is_deterministic() {
    let spec = reduced(SceneSpec { noise_sigma: 0.3, seed: 5, ..SceneSpec::cone_disk(50.0, 10.0) });
    let a = generate_scene(&spec, Execution::Parallel).unwrap();
    let b = generate_scene(&spec, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.reference_trajectory, a.truth_trajectory);
}

#[test]
fn gaussian_noise_has_the_requested_spread() {
    let sigma = 0.5;
    let cloud = PointCloud::new(vec![Point3::origin(); 1_000_000 / 3 + 1]).unwrap();
    let noisy = perturb(&cloud, sigma, 2024).unwrap();
    for axis in 0..3 {
        let xs: Vec<f64> = noisy.positions().iter().map(|p| p[axis]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 5.0 * sigma / n.sqrt(), "axis {axis} mean {mean}");
        assert!((sd - sigma).abs() / sigma < 0.01, "axis {axis} sd {sd}");
    }
    let all: Vec<f64> = noisy.positions().iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    let sd = (all.iter().map(|x| x * x).sum::<f64>() / all.len() as f64).sqrt();
    assert!((sd - sigma).abs() / sigma < 0.01);
}
