use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mode shape: {0}")]
    InvalidShape(String),

    #[error("cutoff guard violated: {0}")]
    CutoffOverflow(String),

    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tol:.3e} ({context})")]
    LeakageExceeded { leakage: f64, tol: f64, context: String },

    #[error("occupation {occupation} out of range for mode {mode} with cutoff {cutoff}")]
    OccupationOutOfRange { mode: usize, occupation: usize, cutoff: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("incompatible shapes: {0}")]
    ShapeMismatch(String),

    #[error("mode {mode} out of range for a {num_modes}-mode state")]
    ModeOutOfRange { mode: usize, num_modes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("identity check `{name}` failed: lhs {lhs:e}, rhs {rhs:e}, tolerance {tol:e}")]
    IdentityViolation { name: String, lhs: f64, rhs: f64, tol: f64 },

    #[error("oracle size cap exceeded: dimension {dim} > {cap}")]
    OracleTooLarge { dim: usize, cap: usize },

    #[error("correlation grid: {0}")]
    Grid(String),

    #[error("unknown witness id `{0}`")]
    UnknownWitness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
