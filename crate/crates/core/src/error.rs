use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    InvalidAxis { axis: usize, dim: usize },
    #[error("finite difference needs a nonzero shift")]
    ZeroShift,
    #[error("finite difference order must be 1, 2 or 3 (got {0})")]
    InvalidOrder(usize),
    #[error("kernel is singular at the lattice origin")]
    SingularPoint,
    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),
    #[error("phi_min certification failed: scan found {scan} below far-corner value {corner}")]
    PhiMinCertification { corner: f64, scan: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("density lost positivity at t = {t}: min rho = {min_rho}")]
    PositivityLoss { t: f64, min_rho: f64 },
    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("mass must be positive (got {0})")]
    NonPositiveMass(f64),
    #[error("decay fit: {0}")]
    Fit(String),
    #[error("nmp certificate: every sample was skipped as degenerate")]
    AllSamplesSkipped,
    #[error("not flocked: {0}")]
    NotFlocked(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("config: {0}")]
    ConfigMissing(String),
    #[error("field dump: {0}")]
    Format(String),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical integration itself, as opposed to
    /// bad input or I/O.
    pub fn is_numerical_abort(&self) -> bool {
        matches!(
            self,
            Error::PositivityLoss { .. } | Error::NonFinite { .. }
        )
    }
}
