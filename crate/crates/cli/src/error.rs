use std::fmt::Debug;

use serde_json::{json, Value};

use islescale::backproject::BackprojectError;
use islescale::footprint::FootprintError;
use islescale::geom::GeomError;
use islescale::ingest::IngestError;
use islescale::synth::SynthError;

pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// A failed command. I/O problems exit with 1, everything else with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Io { kind: String, message: String },
    #[error("missing config key `{0}`")]
    MissingKey(&'static str),
    #[error("{message}")]
    Validation { kind: String, message: String, frame_id: Option<i64> },
}

/// The variant name of an error enum, taken from its `Debug` form.
fn variant_name(e: &impl Debug) -> String {
    format!("{e:?}").chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect()
}

impl CliError {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        CliError::Validation { kind: kind.to_string(), message: message.into(), frame_id: None }
    }

    pub fn for_frame(frame_id: i64, kind: &str, message: impl Into<String>) -> Self {
        CliError::Validation { kind: kind.to_string(), message: message.into(), frame_id: Some(frame_id) }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn kind(&self) -> &str {
        match self {
            CliError::Io { kind, .. } | CliError::Validation { kind, .. } => kind,
            CliError::MissingKey(_) => "MissingKey",
        }
    }

    /// The machine-readable form printed on stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() });
        match self {
            CliError::MissingKey(key) => v["key"] = json!(key),
            CliError::Validation { frame_id: Some(id), .. } => v["frame_id"] = json!(id),
            _ => {}
        }
        v
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let kind = variant_name(&e);
        if e.is_io() {
            CliError::Io { kind, message: e.to_string() }
        } else {
            CliError::Validation { kind, message: e.to_string(), frame_id: None }
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation { kind: variant_name(&e), message: e.to_string(), frame_id: None }
            }
        }
    )*};
}

validation_from!(GeomError, BackprojectError, FootprintError, SynthError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io { kind: "Io".into(), message: e.to_string() }
    }
}
