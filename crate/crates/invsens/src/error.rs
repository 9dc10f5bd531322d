use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter was out of range or non-finite.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// An input collection that must be nonempty was empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Exhaustive enumeration would exceed the supported domain size.
    #[error("domain too large to enumerate: |alphabet|^n = {size} exceeds cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    /// Every candidate carried zero probability mass.
    #[error("all probability masses are zero")]
    ZeroMass,

    /// Iterative solver hit its iteration cap before reaching tolerance.
    #[error("solver did not converge within {0} iterations")]
    NoConvergence(usize),

    /// A matrix that must be invertible was singular (or numerically so).
    #[error("singular matrix: {0}")]
    Singular(&'static str),

    /// The proposal ellipsoid is not contained in the parameter domain.
    #[error("proposal ellipsoid (radius {radius}) is not contained in the domain")]
    EllipsoidOutsideDomain { radius: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for [`Error::InvalidParam`].
    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
