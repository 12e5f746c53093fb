use std::path::{Path, PathBuf};

use burgers_core::colehopf::ColeHopfError;
use burgers_core::fbsde::FbsdeError;
use burgers_core::fields::FieldError;
use burgers_core::initial_data::InitError;
use burgers_core::noise::NoiseError;
use burgers_core::solver::SolverError;
use serde::Serialize;
use thiserror::Error;

/// Failure of a harness command; each variant maps to a fixed exit code.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Parameter(String),
    #[error("{0}")]
    Synthesis(String),
    #[error("{0}")]
    Stability(String),
    #[error("{0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Parameter(_) | LabError::Io { .. } => 2,
            LabError::Synthesis(_) => 3,
            LabError::Stability(_) => 4,
            LabError::Format(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Parameter(_) => "parameter",
            LabError::Io { .. } => "io",
            LabError::Synthesis(_) => "synthesis",
            LabError::Stability(_) => "stability",
            LabError::Format(_) => "format",
        }
    }

    /// One-line JSON record for standard error.
    pub fn machine_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            code: i32,
            message: String,
        }
        serde_json::to_string(&Line {
            error: self.kind(),
            code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("plain struct serializes")
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<FieldError> for LabError {
    fn from(e: FieldError) -> Self {
        LabError::Parameter(e.to_string())
    }
}

impl From<InitError> for LabError {
    fn from(e: InitError) -> Self {
        match e {
            InitError::Synthesis(_) => LabError::Synthesis(e.to_string()),
            _ => LabError::Parameter(e.to_string()),
        }
    }
}

impl From<NoiseError> for LabError {
    fn from(e: NoiseError) -> Self {
        match e {
            NoiseError::Init(inner) => inner.into(),
            _ => LabError::Parameter(e.to_string()),
        }
    }
}

impl From<SolverError> for LabError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::StepSize { .. } | SolverError::Divergence { .. } => {
                LabError::Stability(e.to_string())
            }
            SolverError::Noise(inner) => inner.into(),
            _ => LabError::Parameter(e.to_string()),
        }
    }
}

impl From<ColeHopfError> for LabError {
    fn from(e: ColeHopfError) -> Self {
        match e {
            ColeHopfError::Underflow { .. } => LabError::Stability(e.to_string()),
            _ => LabError::Parameter(e.to_string()),
        }
    }
}

impl From<FbsdeError> for LabError {
    fn from(e: FbsdeError) -> Self {
        match e {
            FbsdeError::Solver(inner) => inner.into(),
            FbsdeError::Noise(inner) => inner.into(),
            _ => LabError::Parameter(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Format(format!("json: {e}"))
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Format(format!("csv: {e}"))
    }
}
