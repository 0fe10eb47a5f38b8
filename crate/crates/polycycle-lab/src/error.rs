use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument violated a precondition (left the admissible domain).
    #[error("domain error: {0}")]
    Domain(String),

    /// An orbit left the interval (0, delta); `step` is the first offending iterate.
    #[error("orbit escaped (0, {delta}) at iterate {step}")]
    EscapedDomain { step: usize, delta: f64 },

    /// Chart construction gave up: iterates did not contract within the budget.
    #[error("iterates failed to contract within {steps} steps")]
    NonContracting { steps: usize },

    /// The model cannot be evaluated deep enough on the neg-log scale to
    /// certify the requested tolerance; `achieved` is the certified bound
    /// at the point where evaluation had to stop.
    #[error("representable depth exhausted before tolerance was met (achieved {achieved:e})")]
    PrecisionExhausted { achieved: f64 },

    /// Monotone inversion of a map failed to bracket a preimage.
    #[error("map inversion failed to bracket a preimage of u = {target_u}")]
    InversionFailure { target_u: f64 },

    /// The connection equation showed no sign change within the widening budget.
    #[error("no sign change bracketed for the connection equation (n = {n} may be too small)")]
    NoBracket { n: u32 },

    /// A configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A query fell outside the tabulated range.
    #[error("out of tabulated range: {0}")]
    OutOfRange(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// All coordinates of a projective representative vanished.
    #[error("projective class is degenerate (all coordinates zero)")]
    DegenerateClass,

    /// Rationality detection disagreed between the two inputs; the caller
    /// must flag which regime applies.
    #[error("rationality regime is ambiguous; flag the regime explicitly")]
    AmbiguousRationality,

    /// A mathematically guaranteed property failed; indicates a bug or an
    /// uncertified input.
    #[error("property violation: {0}")]
    PropertyViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
