use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    /// The parameter describes a point mass; there is no density with respect
    /// to Lebesgue or surface measure.
    #[error("density undefined: parameter describes a point mass")]
    PointMass,

    #[error("input lies at (or too close to) a singular point of the map")]
    Singular,

    /// Composing two sphere maps produced a map whose `phi` parameter would be
    /// the point at infinity.
    #[error("composition has no finite sphere-map parameter")]
    DegenerateComposition,

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("monotonicity check failed: {0}")]
    NonMonotone(String),

    #[error("transform and parameter kinds do not match")]
    KindMismatch,

    #[error("empty input")]
    Empty,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
