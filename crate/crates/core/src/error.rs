use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "domain violates the upper half-plane margin: min Im = {min_im:.6}, required {d_min:.6}"
    )]
    DomainTooLow { min_im: f64, d_min: f64 },

    #[error("rejection sampling exceeded {cap} draws for {accepted}/{requested} points")]
    SamplingCap {
        cap: usize,
        accepted: usize,
        requested: usize,
    },

    #[error("interpolant vanishes at eigenvalue {index}, norming constant would be zero")]
    ZeroNormingConstant { index: usize },

    #[error("contour geometry: {0}")]
    Geometry(String),

    #[error("point {index} lies outside the admissible region: {reason}")]
    ContractViolation { index: usize, reason: String },

    #[error("degenerate dressing step {step}: |q| = {norm:e}")]
    DegenerateDressing { step: usize, norm: f64 },

    #[error("eigenvalues {i} and {j} coincide (|λ_i − λ_j| = {gap:e})")]
    CoincidentEigenvalues { i: usize, j: usize, gap: f64 },

    #[error("singular linear system (pivot {pivot} of {size}, condition estimate {condition:e})")]
    Singular {
        pivot: usize,
        size: usize,
        condition: f64,
    },

    #[error("accuracy failure in {what}: {value:e} exceeds tolerance {tolerance:e}")]
    Accuracy {
        what: &'static str,
        value: f64,
        tolerance: f64,
    },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
