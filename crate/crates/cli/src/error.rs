use odin_core::energy::EnergyError;
use odin_core::engine::EngineError;
use odin_core::mem::MemError;
use odin_core::trace::TraceError;
use odin_workloads::WorkloadError;
use thiserror::Error;

/// Process exit codes. Usage errors exit with 2 through clap.
pub mod code {
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const DECODE: i32 = 5;
    pub const CONFIG: i32 = 6;
    pub const ENERGY: i32 = 7;
    pub const DATASET: i32 = 8;
    pub const CHECK_FAILED: i32 = 9;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Decode(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("{0}")]
    Dataset(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => code::USAGE,
            CliError::Io { .. } => code::IO,
            CliError::Parse(_) => code::PARSE,
            CliError::Decode(_) => code::DECODE,
            CliError::Config(_) => code::CONFIG,
            CliError::Energy(EnergyError::Io(_)) => code::IO,
            CliError::Energy(EnergyError::Parse(_)) => code::PARSE,
            CliError::Energy(_) => code::ENERGY,
            CliError::Dataset(_) => code::DATASET,
            CliError::CheckFailed(_) => code::CHECK_FAILED,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Io(source) => CliError::Io {
                path: "trace".into(),
                source,
            },
            TraceError::Parse { .. } => CliError::Parse(e.to_string()),
            TraceError::Decode { .. } => CliError::Decode(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Aer(_) => CliError::Decode(e.to_string()),
            EngineError::Unsorted(_) => CliError::Parse(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MemError> for CliError {
    fn from(e: MemError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<WorkloadError> for CliError {
    fn from(e: WorkloadError) -> Self {
        match e {
            WorkloadError::Io(source) => CliError::Io {
                path: "input".into(),
                source,
            },
            WorkloadError::DatasetMissing(_) | WorkloadError::Idx { .. } => {
                CliError::Dataset(e.to_string())
            }
            WorkloadError::Config(_) | WorkloadError::WeightFile { .. } => {
                CliError::Parse(e.to_string())
            }
            WorkloadError::UnknownBehavior(_) => CliError::Usage(e.to_string()),
            WorkloadError::Engine(inner) => inner.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}
