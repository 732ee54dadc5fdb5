use thiserror::Error;

/// Errors raised by the numerical layers.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type used
/// for the computation, so the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid too coarse: {n} interior nodes, at least {min} required")]
    TooCoarse { n: usize, min: usize },
    #[error("sampled functions live on different grids")]
    GridMismatch,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mu = {mu} is (numerically) an eigenvalue of the discrete pencil")]
    OnEigenvalue { mu: f64 },
    #[error("weight is not in the admissible class: {0}")]
    NotInWeightClass(String),
    #[error("eigenfunction k = {k} ({nu}) has {count} interior zeros, expected {expected}")]
    NodalMismatch {
        k: usize,
        nu: char,
        count: usize,
        expected: usize,
    },
    #[error("boundary determinant has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("function is numerically trivial")]
    TrivialFunction,
    #[error("point {0} lies outside the open interval (0, 1)")]
    OutOfDomain(f64),

    #[error("boundary conditions violated: {0}")]
    BoundaryViolation(String),
    #[error("asymptotic hypothesis check failed: {0}")]
    AsymptoticMismatch(String),
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Jacobian is numerically singular (pivot ratio {pivot:e}); perturb mu")]
    SingularJacobian { pivot: f64 },

    #[error("bifurcation start failed: {0}")]
    StartFailure(String),
    #[error("continuation step failed after {points} points (last mu = {mu}, e-norm = {enorm}): {diagnostic}")]
    StepFailure {
        points: usize,
        mu: f64,
        enorm: f64,
        diagnostic: String,
    },
    #[error("branch never crossed mu = 1 (reached mu = {mu}, e-norm = {enorm})")]
    NoCrossing { mu: f64, enorm: f64 },
    #[error("gamma = {gamma} is not admissible: {detail}")]
    GammaNotAdmissible { gamma: f64, detail: String },

    #[error("comparison hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("io: {0}")]
    Io(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Inputs rejected by a hypothesis or validation check.
    Validation,
    /// A numerical procedure failed.
    Numerical,
    /// Malformed input or environment problems.
    Usage,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            GammaNotAdmissible { .. }
            | NotInWeightClass(_)
            | AsymptoticMismatch(_)
            | HypothesisViolated(_)
            | BoundaryViolation(_)
            | OnEigenvalue { .. } => ErrorClass::Validation,
            NoConvergence { .. }
            | StepFailure { .. }
            | NoCrossing { .. }
            | SingularJacobian { .. }
            | StartFailure(_)
            | NodalMismatch { .. }
            | NoSignChange { .. }
            | TrivialFunction => ErrorClass::Numerical,
            TooCoarse { .. }
            | GridMismatch
            | NonFinite { .. }
            | InvalidInput(_)
            | OutOfDomain(_)
            | Io(_) => ErrorClass::Usage,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
