use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hilbert-space dimension {dim} exceeds the configured cap {cap}")]
    DimensionCapExceeded { dim: u128, cap: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("interaction range {range} exceeds the allowed maximum {max}")]
    RangeViolation { range: f64, max: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix dimension {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator supports overlap")]
    OverlappingSupports,

    #[error("operator norm {norm} exceeds 1")]
    NormViolation { norm: f64 },

    #[error("iterative solver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("expected {expected} local states, got {got}")]
    SiteCountMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("every sample lies below the numeric floor")]
    AllSamplesFloored,

    #[error("t = 0 correlation {value:e} above the floor: initial state is not a product state")]
    NonProductStart { value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{count} deterministic strategies exceed the enumeration limit")]
    TooManyStrategies { count: u128 },

    #[error("margin delta must be positive, got {0}")]
    ZeroMargin(f64),

    #[error("decay rate lambda must be positive, got {0}")]
    ZeroDecay(f64),

    #[error("formula mismatch: {0}")]
    FormulaMismatch(String),

    #[error("declared local bound {declared} differs from enumerated {computed}")]
    LocalBoundMismatch { declared: f64, computed: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
