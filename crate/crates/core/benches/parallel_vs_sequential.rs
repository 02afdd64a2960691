use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nalgebra::{Point2, Point3};

use islescale::backproject::{count_votes, LabelingConfig};
use islescale::footprint::{avg_nn_distance_with, perimeter_with, rasterize_with};
use islescale::geom::PointCloud;
use islescale::ingest::IntrinsicsRecord;
use islescale::synth::{generate_scene, SceneRng, SceneSpec};
use islescale::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn scene_spec() -> SceneSpec {
    let mut spec = SceneSpec::cone_disk(100.0, 20.0);
    spec.orbit.frame_count = 16;
    spec
}

fn random_2d(n: usize) -> Vec<Point2<f64>> {
    let mut rng = SceneRng::new(3);
    (0..n).map(|_| Point2::new(500.0 * rng.uniform(), 500.0 * rng.uniform())).collect()
}

fn labeling(c: &mut Criterion) {
    let scene = generate_scene(&scene_spec(), Execution::Parallel).unwrap();
    let views = scene.views();
    let cfg = LabelingConfig::default();
    let mut group = c.benchmark_group("count_votes");
    group.sample_size(10);
    group.throughput(Throughput::Elements((scene.truth_cloud.len() * views.len()) as u64));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| count_votes(&scene.truth_cloud, &views, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn nearest_neighbours(c: &mut Criterion) {
    let pts = random_2d(200_000);
    let mut group = c.benchmark_group("avg_nn_distance");
    group.sample_size(10);
    group.throughput(Throughput::Elements(pts.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| avg_nn_distance_with(&pts, exec).unwrap()));
    }
    group.finish();
}

fn rasterization(c: &mut Criterion) {
    let pts = random_2d(1_000_000);
    let z: Vec<f64> = pts.iter().map(|p| p.x * 0.01).collect();
    let mut group = c.benchmark_group("rasterize_and_perimeter");
    group.sample_size(10);
    group.throughput(Throughput::Elements(pts.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let grid = rasterize_with(&pts, &z, 0.5, exec).unwrap();
                perimeter_with(&grid, exec)
            })
        });
    }
    group.finish();
}

fn mask_synthesis(c: &mut Criterion) {
    let mut spec = scene_spec();
    spec.point_spacing = 4.0;
    spec.intrinsics = IntrinsicsRecord { fx: 350.0, fy: 350.0, cx: 200.0, cy: 150.0, width: 400, height: 300 };
    let mut group = c.benchmark_group("generate_scene");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| generate_scene(&spec, exec).unwrap()));
    }
    group.finish();
}

fn cloud_io(c: &mut Criterion) {
    // Not parallel; included to show where the pipeline's remaining time goes.
    let mut rng = SceneRng::new(4);
    let cloud = PointCloud::new((0..200_000).map(|_| Point3::new(rng.uniform(), rng.uniform(), rng.uniform())).collect()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ply");
    let mut group = c.benchmark_group("ply_binary");
    group.sample_size(10);
    group.bench_function("write_read", |b| {
        b.iter(|| {
            islescale::ingest::write_point_cloud(&cloud, &path, islescale::ingest::PlyEncoding::BinaryLittleEndian).unwrap();
            islescale::ingest::read_point_cloud(&path).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, labeling, nearest_neighbours, rasterization, mask_synthesis, cloud_io);
criterion_main!(benches);
