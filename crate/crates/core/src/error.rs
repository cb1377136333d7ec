use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("frame has {got} taxels, geometry expects {expected}")]
    FrameShape { expected: usize, got: usize },

    #[error("sample {index}: pressure {pressure} Pa is negative or not finite")]
    InvalidPressure { index: usize, pressure: f64 },

    #[error("sample {index}: pressure decreases from {previous} Pa to {pressure} Pa (loading branch only)")]
    NonMonotonePressure {
        index: usize,
        previous: f64,
        pressure: f64,
    },

    #[error("degenerate capacitance range: c_min {c_min} >= c_max {c_max}")]
    DegenerateRange { c_min: f64, c_max: f64 },

    #[error("rank-deficient fit: {distinct} distinct abscissae, need at least {required}")]
    RankDeficient { distinct: usize, required: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("empty data series")]
    EmptyData,

    #[error("taxel {taxel} out of range for a skin of {n_taxels} taxels")]
    TaxelIndex { taxel: usize, n_taxels: usize },

    #[error("every taxel was excluded during calibration")]
    EmptyModel,

    #[error("insufficient data: {available} samples, need at least {required}")]
    InsufficientData { required: usize, available: usize },

    #[error("taxel {0} is excluded from the model")]
    ExcludedTaxel(usize),

    #[error("invalid patch: {0}")]
    InvalidPatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Value {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: row {row}: pressure {pressure_kpa} kPa is below the previous row's {previous_kpa} kPa (loading branch only)")]
    Protocol {
        path: PathBuf,
        row: usize,
        previous_kpa: f64,
        pressure_kpa: f64,
    },

    #[error("{path}: model format version {found} is not supported (expected {expected})")]
    IncompatibleModel {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
