//! On-disk formats: PLY point clouds, trajectory and intrinsics JSON, binary
//! masks (PGM/PNG), grayscale image output, and WGS84 geodetic to local
//! East-North-Up conversion.

mod geodetic;
mod image;
mod intrinsics;
mod ply;
mod trajectory;

use std::path::{Path, PathBuf};

pub use geodetic::{ecef_to_enu, geodetic_to_ecef, geodetic_to_local, GeodeticPoint, WGS84_A, WGS84_INV_F};
pub use image::{
    decode_grayscale, decode_mask, encode_pgm, encode_png, locate_mask, mask_file_name, read_grayscale, read_mask,
    write_grayscale, write_mask, GrayImage, MaskImage,
};
pub use intrinsics::{read_intrinsics, write_intrinsics, IntrinsicsRecord, IntrinsicsSet};
pub use ply::{
    parse_point_cloud, read_point_cloud, write_point_cloud, write_point_cloud_with, PlyEncoding, PlyScalar,
    PlyWriteOptions,
};
pub use trajectory::{
    parse_trajectory, read_trajectory, write_trajectory, CoordinateFrame, FrameRecord, TrajectoryDocument,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("vertex element lacks x/y/z properties")]
    MissingXyz,
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("frame id {frame_id} is duplicated or out of order (index {index})")]
    DuplicateFrameId { index: usize, frame_id: i64 },
    #[error("expected a {expected} trajectory, got {got}")]
    WrongFrame { expected: CoordinateFrame, got: CoordinateFrame },
    #[error("unsupported color type {0}; masks and images must be single-channel grayscale")]
    UnsupportedColorType(String),
    #[error("unsupported image extension for {0}; use .png or .pgm")]
    UnsupportedExtension(PathBuf),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(#[from] crate::geom::GeomError),
}

impl IngestError {
    /// True for failures of the filesystem rather than of the content.
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::Io { .. })
    }

    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        IngestError::Parse { offset, message: message.into() }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Schema { field: field.into(), message: message.into() }
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, IngestError> {
    std::fs::read(path).map_err(|source| IngestError::Io { path: path.to_owned(), source })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    std::fs::write(path, bytes).map_err(|source| IngestError::Io { path: path.to_owned(), source })
}
