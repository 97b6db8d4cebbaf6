//! Experiment drivers for the odin-core emulator: the 20 neuron behaviors,
//! the SDSP stochasticity experiment and the MNIST classifier.

use std::path::PathBuf;

use odin_core::engine::EngineError;
use odin_core::mem::MemError;
use odin_core::neuron::ParamError;
use thiserror::Error;

pub mod behaviors;
pub mod classifier;
pub mod coding;
pub mod ltp;
pub mod mnist;
pub mod preprocess;
pub mod rng;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: malformed IDX file: {msg}")]
    Idx { path: PathBuf, msg: String },
    #[error("MNIST file not found: {0} (set ODIN_MNIST_DIR or run scripts/fetch_mnist.sh)")]
    DatasetMissing(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("weight file line {line}: {msg}")]
    WeightFile { line: usize, msg: String },
    #[error("weight {value} at row {row}, column {col} is out of range")]
    InvalidWeight { row: usize, col: usize, value: i32 },
    #[error("unknown behavior `{0}`")]
    UnknownBehavior(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Param(#[from] ParamError),
}
