use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),
    #[error("density must be strictly positive, got {value} at {at}")]
    NonPositiveDensity { value: f64, at: f64 },
    #[error("geodesic left the chart window at parameter {at}")]
    OutOfWindow { at: f64 },
    #[error("fiber vector of norm {norm} is outside the injectivity window (radius {radius})")]
    OutsideInjectivity { norm: f64, radius: f64 },
    #[error("fiber dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("observable is not in the Paley-Wiener class: {0}")]
    NotPaleyWiener(String),
    #[error("result falls outside the representable observable class: {0}")]
    NotRepresentable(String),
    #[error("Fourier support touches the fiber window boundary (aliasing risk)")]
    SupportTouchesBoundary,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("model/family mismatch: {0}")]
    FamilyMismatch(String),
    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),
    #[error("invalid hbar {0}: must be strictly positive")]
    InvalidHbar(f64),
    #[error("kernel support of width {needed} overflows the grid window {available}")]
    SupportOverflow { needed: f64, available: f64 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("not enough data for a fit: {0}")]
    InsufficientData(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
