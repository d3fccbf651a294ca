use std::io;
use std::path::{Path, PathBuf};

use crate::npy::NpyError;

/// Errors surfaced by the pipeline, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error(transparent)]
    Npy(#[from] NpyError),
    #[error(transparent)]
    Core(#[from] napaudit_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        source: napaudit_core::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{stage} needs the output of `{needs}`; run `napaudit {needs}` first ({missing} is missing)")]
    Prerequisite {
        stage: &'static str,
        needs: &'static str,
        missing: PathBuf,
    },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
}

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

impl AuditError {
    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> AuditError + '_ {
        move |source| AuditError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl std::fmt::Display) -> AuditError {
        AuditError::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        use napaudit_core::Error as E;
        match self {
            AuditError::Npy(NpyError::Format { .. }) => "format",
            AuditError::Npy(NpyError::UnsupportedDtype { .. }) => "unsupported_dtype",
            AuditError::Npy(NpyError::Io { .. }) | AuditError::Io { .. } => "io",
            AuditError::Npy(NpyError::Tensor { source, .. })
            | AuditError::Core(source)
            | AuditError::InFile { source, .. } => match source {
                E::NonFinite(_) => "numeric",
                E::Schema { .. } | E::InvalidSchema(_) => "schema",
                E::Shape(_) | E::ShapeMismatch { .. } => "shape",
                E::Source(_) => "io",
                _ => "validation",
            },
            AuditError::Parse { .. } => "parse",
            AuditError::Validation(_) => "validation",
            AuditError::Prerequisite { .. } => "prerequisite",
            AuditError::Image { .. } => "image",
        }
    }

    /// 2 validation, 3 prerequisite, 4 numeric failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "format" | "unsupported_dtype" | "schema" | "shape" | "parse" | "validation" => 2,
            "prerequisite" => 3,
            "numeric" => 4,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
