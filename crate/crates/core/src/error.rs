use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("axis {axis} out of range for dimension {d}")]
    AxisOutOfRange { axis: usize, d: usize },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("margin {margin} too large for box radius {radius}")]
    MarginTooLarge { margin: usize, radius: usize },
    #[error("operator is not hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("matrix of size {size} exceeds the dense cap {cap}")]
    OverCap { size: usize, cap: usize },
    #[error("function not finite at spectral point {0}")]
    NonFinite(f64),
    #[error("resolvent refused: {0}")]
    RealShift(String),
    #[error("solver breakdown: {0}")]
    Solver(String),
    #[error("no convergence after {iterations} iterations (estimate {estimate:e})")]
    NoConvergence { iterations: usize, estimate: f64 },
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
