use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_bytes, write_bytes, IngestError};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl IntrinsicsRecord {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |field: &str, message: &str| Err(IngestError::schema(field, message));
        if !(self.fx.is_finite() && self.fx > 0.0) {
            return bad("fx", "must be positive");
        }
        if !(self.fy.is_finite() && self.fy > 0.0) {
            return bad("fy", "must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("width", "image dimensions must be positive");
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return bad("cx", "principal point must lie inside the image");
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return bad("cy", "principal point must lie inside the image");
        }
        Ok(())
    }
}

/// One record shared by all frames, or one per frame in trajectory order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntrinsicsSet {
    Shared(IntrinsicsRecord),
    PerFrame(Vec<IntrinsicsRecord>),
}

impl IntrinsicsSet {
    /// Intrinsics of the frame at `index` in trajectory order.
    pub fn get(&self, index: usize) -> Option<&IntrinsicsRecord> {
        match self {
            IntrinsicsSet::Shared(r) => Some(r),
            IntrinsicsSet::PerFrame(v) => v.get(index),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        match self {
            IntrinsicsSet::Shared(r) => r.validate(),
            IntrinsicsSet::PerFrame(v) => v.iter().enumerate().try_for_each(|(i, r)| {
                r.validate().map_err(|e| match e {
                    IngestError::Schema { field, message } => IngestError::schema(format!("[{i}].{field}"), message),
                    other => other,
                })
            }),
        }
    }
}

pub fn read_intrinsics(path: impl AsRef<Path>) -> Result<IntrinsicsSet, IngestError> {
    let bytes = read_bytes(path.as_ref())?;
    let set: IntrinsicsSet = serde_json::from_slice(&bytes)
        .map_err(|e| IngestError::schema("intrinsics", e.to_string()))?;
    set.validate()?;
    Ok(set)
}

pub fn write_intrinsics(set: &IntrinsicsSet, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let mut json = serde_json::to_vec_pretty(set).expect("intrinsics always serialize");
    json.push(b'\n');
    write_bytes(path.as_ref(), &json)
}
