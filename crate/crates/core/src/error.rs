use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (cutoff {cutoff})")]
    OutOfRange { index: usize, cutoff: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis width mismatch: {0} vs {1}")]
    WidthMismatch(f64, f64),

    #[error("gate target {target} out of range for {modes} modes")]
    InvalidTarget { target: usize, modes: usize },

    #[error("scale factor must be positive, got {0}")]
    InvalidScale(f64),

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("covariance violates the uncertainty relation (min eigenvalue {0:e})")]
    UnphysicalCovariance(f64),

    #[error("state has nonzero mean (|mean| = {0:e}); displaced states need loop hafnians")]
    DisplacedState(f64),

    #[error("state is mixed (det(2 cov) = {0}); only pure states are supported here")]
    MixedState(f64),

    #[error("matrix dimension {0} is odd")]
    OddDimension(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("cost guard exceeded: {what} needs {needed}, limit {limit}")]
    CostGuard {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("truncated probability mass {mass} below required {required}; raise the cutoff")]
    InsufficientMass { mass: f64, required: f64 },

    #[error("hafnian has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("photon number {0} must be even and at least 2")]
    OddPhotonNumber(usize),
}

/// Non-fatal numerical diagnostics attached to a result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// Doubling the quadrature order moved the value by `drift`.
    Accuracy { drift: f64 },
    /// Probability mass lost to the coefficient cutoff.
    Truncation { deficit: f64 },
}

/// A value together with an optional diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub warning: Option<Warning>,
}

impl<T> Flagged<T> {
    pub fn clean(value: T) -> Self {
        Self {
            value,
            warning: None,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warning.is_none()
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Flagged<U> {
        Flagged {
            value: f(self.value),
            warning: self.warning,
        }
    }
}
