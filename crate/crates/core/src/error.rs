use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("segment has no pixels")]
    EmptySegment,
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("illegal label: {0}")]
    IllegalLabel(String),
    #[error("pixel ({row}, {col}) outside {height}x{width} frame")]
    OutOfBounds {
        row: u32,
        col: u32,
        height: u32,
        width: u32,
    },
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("optimizer did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("protocol needs at least {needed} sequences, got {got}")]
    TooFewSequences { needed: usize, got: usize },
    #[error("no positive (OOD) pixels inside the region of interest")]
    NoPositives,
    #[error("no negative (not-OOD) pixels inside the region of interest")]
    NoNegatives,
    #[error("ground-truth segment is empty")]
    EmptyGt,
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
    #[error("no ground-truth objects in evaluated frames")]
    NoGtObjects,
    #[error("perplexity {perplexity} too large for {points} points")]
    PerplexityTooLarge { perplexity: f64, points: usize },
    #[error("too few points: {0}")]
    TooFewPoints(String),
    #[error("no ground-truth instances inside any cluster")]
    NoInstances,
    #[error("no clusters")]
    NoClusters,
    #[error("no ground-truth classes inside any cluster")]
    NoClasses,
    #[error("unknown operation {0:?}")]
    UnknownOp(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("PNG error on {path}: {message}")]
    Png { path: PathBuf, message: String },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numerical,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySegment => "EmptySegment",
            Error::BadMagic { .. } => "BadMagic",
            Error::DimMismatch(_) => "DimMismatch",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::SizeMismatch(_) => "SizeMismatch",
            Error::IllegalLabel(_) => "IllegalLabel",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::DegenerateData(_) => "DegenerateData",
            Error::NoConvergence(_) => "NoConvergence",
            Error::TooFewSequences { .. } => "TooFewSequences",
            Error::NoPositives => "NoPositives",
            Error::NoNegatives => "NoNegatives",
            Error::EmptyGt => "EmptyGt",
            Error::MissingMetadata(_) => "MissingMetadata",
            Error::NoGtObjects => "NoGtObjects",
            Error::PerplexityTooLarge { .. } => "PerplexityTooLarge",
            Error::TooFewPoints(_) => "TooFewPoints",
            Error::NoInstances => "NoInstances",
            Error::NoClusters => "NoClusters",
            Error::NoClasses => "NoClasses",
            Error::UnknownOp(_) => "UnknownOp",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidManifest(_) => "InvalidManifest",
            Error::Io { .. } => "Io",
            Error::Png { .. } => "Png",
            Error::Json(_) => "Json",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DegenerateData(_)
            | Error::NoConvergence(_)
            | Error::PerplexityTooLarge { .. }
            | Error::TooFewPoints(_)
            | Error::NoPositives
            | Error::NoNegatives
            | Error::NoGtObjects
            | Error::NoInstances
            | Error::NoClusters
            | Error::NoClasses => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}
