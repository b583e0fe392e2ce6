use thiserror::Error;

/// Errors raised by the period machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("automorphy factor underflows at z = {re} + {im}i (point on or near the real axis)")]
    NearPole { re: f64, im: f64 },

    #[error("polynomial degree bound {have} exceeds target bound {target}")]
    DegreeOverflow { have: usize, target: usize },

    #[error("interpolation system is ill-conditioned (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("group construction failed: {0}")]
    ConstructionFailure(String),

    #[error("element budget exceeded: more than {cap} elements")]
    BudgetExceeded { cap: usize },

    #[error("operation not supported for this group model: {0}")]
    UnsupportedGroup(String),

    #[error("quadrature tolerance {tol:.1e} not met (estimated error {estimate:.3e})")]
    ToleranceNotMet { tol: f64, estimate: f64 },

    #[error("Cauchy disk leaves the upper half-plane (Im z = {im}, radius = {radius})")]
    DomainViolation { im: f64, radius: f64 },

    #[error("sampled period is not a polynomial of degree <= {degree} (residual {residual:.3e} > {threshold:.3e})")]
    NotPolynomial { degree: usize, residual: f64, threshold: f64 },

    #[error("numerical rank is ambiguous (singular value gap {gap:.3e} < {required:.1e})")]
    RankAmbiguous { gap: f64, required: f64 },

    #[error("edge moments agree only after a global sign flip (edge {edge}, mu = {mu})")]
    SignConventionMismatch { edge: usize, mu: usize },

    #[error("square-root branch tracking failed: {0}")]
    BranchTrackingFailure(String),

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
