//! Metric-scale island measurement from monocular reconstructions.
//!
//! The crate is organised as the pipeline runs:
//!
//! 1. [`geom`] – rigid poses, similarity transforms and the closed-form
//!    Umeyama estimator that restores metric scale from two matched
//!    camera trajectories.
//! 2. [`ingest`] – PLY point clouds, trajectory/intrinsics JSON, binary
//!    masks, grayscale image output and WGS84 geodetic to ENU conversion.
//! 3. [`backproject`] – projects every 3D point into every view, tests the
//!    2D mask behind a per-view Z-buffer and accumulates votes.
//! 4. [`footprint`] – adaptive occupancy-grid rasterization, area,
//!    perimeter, footprint image and height map.
//! 5. [`synth`] – analytic synthetic scenes used as end-to-end oracles.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default). Every parallel path has a sequential twin producing
//! identical results; see [`Execution`].

pub mod backproject;
pub mod exec;
pub mod footprint;
pub mod geom;
pub mod ingest;
pub mod synth;

pub use exec::Execution;
