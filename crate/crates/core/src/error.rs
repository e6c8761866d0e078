use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("time partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("exponent p = {0} is not admissible (need p >= 1)")]
    InvalidExponent(f64),

    #[error("empty domain")]
    EmptyDomain,

    #[error("field is not supported in the domain ({0} cells carry mass outside)")]
    NotSupported(usize),

    #[error("mollifier under-resolved: radius {radius} < 2h = {min}")]
    UnderResolved { radius: f64, min: f64 },

    #[error("shift is not a lattice vector: {0}")]
    NonLatticeShift(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("critical intervals overlap for epsilon = {0}")]
    OverlappingIntervals(f64),

    #[error("nonlinearity declaration rejected: {0}")]
    InvalidNonlinearity(String),

    #[error("nonlinearity is not monotone on the data range [{lo}, {hi}]")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("Newton failed to converge in {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("linear solver did not converge: {0}")]
    SolverFailed(String),

    #[error("domain is disconnected ({0} components)")]
    Disconnected(usize),

    #[error("incompatible Neumann data: net flux {0:.3e}")]
    IncompatibleData(f64),

    #[error("field is not divergence free (max cell residual {0:.3e})")]
    NotDivergenceFree(f64),

    #[error("post-condition violated: {0}")]
    Postcondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
