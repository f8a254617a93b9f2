use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid cutoff {0}: need at least 2 Fock levels")]
    InvalidCutoff(usize),

    #[error("mode index {index} out of range for {modes} mode(s)")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("incompatible states: {0}")]
    IncompatibleStates(String),

    #[error("degenerate projection: in-subspace norm {norm:e} is below threshold")]
    DegenerateProjection { norm: f64 },

    #[error("incompatible parameters: {0}")]
    IncompatibleParameters(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("non-finite cost at coordinate {coordinate}")]
    NonFiniteCost { coordinate: usize },

    #[error("invalid optimizer update: {0}")]
    InvalidUpdate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular basis: B^T B is not invertible")]
    SingularBasis,

    #[error("invalid label {label} for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("incompatible spectra: {0}")]
    IncompatibleSpectra(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("expected {expected} channel(s), got {got}")]
    ChannelCount { expected: usize, got: usize },

    #[error("weight matrix is not invertible: singular value {sigma:e} below floor")]
    NoninvertibleWeight { sigma: f64 },

    #[error("matrix is not unitary: defect {defect:e}")]
    NonUnitary { defect: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("length error: {0}")]
    Length(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("training failed at step {step}: {source}")]
    Training {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Config errors map to exit code 1; everything else is a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
