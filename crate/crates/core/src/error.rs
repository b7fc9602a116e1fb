use thiserror::Error;

pub type Result<T> = std::result::Result<T, HinfError>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HinfError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {threshold:e}")]
    NotSymmetric { asymmetry: f64, threshold: f64 },

    #[error("generator is not strictly negative: largest eigenvalue {lambda_max:e} >= 0")]
    NotCoercive { lambda_max: f64 },

    #[error("weight matrix {name} is not coercive (smallest eigenvalue {lambda_min:e})")]
    WeightNotCoercive { name: &'static str, lambda_min: f64 },

    #[error("dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigenvalue iteration failed to converge")]
    ConvergenceFailure,

    #[error("symmetric factorization broke down (coercivity margin below machine tolerance)")]
    SingularFactorization,

    #[error("resolvent is singular at omega = {omega}")]
    SingularAtFrequency { omega: f64 },

    #[error("unstable system (spectral abscissa {abscissa:e})")]
    UnstableSystem { abscissa: f64 },

    #[error("stable invariant subspace is numerically ill-conditioned: {0}")]
    SubspaceConditioning(String),

    #[error("could not bracket the H-infinity norm: {0}")]
    BracketFailure(String),

    #[error("empty candidate list")]
    EmptyCandidateList,

    #[error("invalid discretization: {0}")]
    InvalidSpec(String),

    #[error("argument {value} outside the domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("coincident points: Green's function is singular")]
    CoincidentPoints,

    #[error("adaptive quadrature did not reach the requested tolerance (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { estimate: f64, error: f64 },
}

impl HinfError {
    /// True when the failure means the input violates a hypothesis
    /// (as opposed to a numerical breakdown on admissible input).
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            HinfError::ConvergenceFailure
                | HinfError::SingularFactorization
                | HinfError::SingularAtFrequency { .. }
                | HinfError::BracketFailure(_)
                | HinfError::SubspaceConditioning(_)
                | HinfError::QuadratureFailure { .. }
        )
    }
}
