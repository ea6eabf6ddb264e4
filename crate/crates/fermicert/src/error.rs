use std::path::Path;

use serde_json::{json, Value};

use crate::config::Diagnostic;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CERTIFICATION: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration")]
    Config(Vec<Diagnostic>),
    #[error(transparent)]
    Core(#[from] fermicert_core::Error),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("report formatting failed: {0}")]
    Format(String),
}

impl RunError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        RunError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    /// Errors that mean a certificate could not be issued map to 2, the rest to 1.
    pub fn exit_code(&self) -> i32 {
        use fermicert_core::Error as E;
        match self {
            RunError::Core(
                E::CertificationFailed { .. }
                | E::GapClosure { .. }
                | E::AmbiguousKernel { .. }
                | E::NotPositive(_)
                | E::KernelMismatch { .. }
                | E::NestingViolation(_),
            ) => EXIT_CERTIFICATION,
            _ => EXIT_USAGE,
        }
    }

    pub fn kind(&self) -> &'static str {
        use fermicert_core::Error as E;
        match self {
            RunError::Config(_) => "invalid-config",
            RunError::Io { .. } => "io",
            RunError::Format(_) => "format",
            RunError::Core(e) => match e {
                E::CertificationFailed { .. } => "certification-failed",
                E::GapClosure { .. } => "gap-closure",
                E::AmbiguousKernel { .. } => "ambiguous-kernel",
                E::NotPositive(_) => "not-positive",
                E::KernelMismatch { .. } => "kernel-mismatch",
                E::NestingViolation(_) => "nesting-violation",
                E::Precondition(_) => "precondition",
                _ => "invalid-argument",
            },
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            RunError::Config(d) => v["diagnostics"] = json!(d),
            RunError::Core(fermicert_core::Error::GapClosure { s, gap, gap_min }) => {
                v["location"] = json!({ "s": s, "gap": gap, "gap_min": gap_min });
            }
            RunError::Core(fermicert_core::Error::CertificationFailed { t, measured, bound }) => {
                v["location"] = json!({ "t": t, "measured": measured, "bound": bound });
            }
            _ => {}
        }
        v
    }
}
