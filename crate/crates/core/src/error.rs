use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid undersampled: extent {extent:.4e} m is below the required {required:.4e} m")]
    GridUndersampled { extent: f64, required: f64 },

    #[error("invalid mode specification: {0}")]
    InvalidSpec(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields or screens are sampled on different grids")]
    MismatchedGrid,

    #[error("field is identically zero")]
    ZeroField,

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("operator is not unitary (max deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("no mutually unbiased Weyl pair found for dimension {0}")]
    NoUnbiasedPair(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row {0} of the fidelity matrix has zero sum (transmitted state fully lost)")]
    ZeroRow(usize),

    #[error("quantum error rate {0} outside [0, 1)")]
    QerDomain(f64),

    #[error("pump and seed have no overlap")]
    ZeroOverlap,

    #[error("no bracketing sign change: {0}")]
    NoBracket(String),

    #[error("detection disc radius {radius:.3e} m is smaller than one transform-plane sample ({spacing:.3e} m)")]
    DiscTooSmall { radius: f64, spacing: f64 },

    #[error("beam diameter {diameter:.4e} m exceeds 0.8x the {extent:.4e} m window; enlarge the grid")]
    WindowOverflow { diameter: f64, extent: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")))
    }
}
