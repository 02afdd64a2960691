//! The `islescale` command line: file-based stages over the core library.
//!
//! Every stage reads a [`config::PipelineConfig`] JSON file and writes its
//! artifacts to `output_dir`. Exit codes are 0 on success, 1 on I/O failure
//! and 2 on invalid input; failures are reported on stderr as one JSON object.

pub mod commands;
pub mod config;
pub mod error;
pub mod scene;

pub use error::CliError;
