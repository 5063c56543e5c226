//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("invalid belief mass: {0}")]
    InvalidMass(String),
    #[error("conflict factor {0} outside [0, 1]")]
    ConflictDomain(f64),
    #[error("Dempster combination does not accept mass on the empty set")]
    EmptySetMass,
    #[error("total conflict (k = {k}); combination saturated with Con = {con}")]
    Saturated { k: f64, con: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid sensor parameters: {0}")]
    InvalidParams(String),
    #[error("sensor model domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("grid dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("sensor kind mismatch: scan is {scan}, model is {model}")]
    SensorMismatch { scan: String, model: String },
    #[error("environment is not a closed polygon: {0}")]
    OpenPolygon(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("magnitude threshold {0} is not tracked by the grid")]
    UnknownMagnitude(f64),
    #[error("invalid indicator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("sequences must have equal length (got {0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("correlation undefined: constant input")]
    ConstantInput,
    #[error("FLD undefined: both classes have zero variance and equal means")]
    UndefinedSeparability,
    #[error("image dimension mismatch")]
    DimensionMismatch,
    #[error("k must be positive")]
    InvalidK,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("pose ({x:.3}, {y:.3}) lies outside the corridor")]
    PoseOutside { x: f64, y: f64 },
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid anomaly parameters: {0}")]
    InvalidAnomaly(String),
    #[error("scenario inconsistent with environment: {0}")]
    Scenario(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
