use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no quadrature rule of degree {0} (supported: 1..=10)")]
    UnsupportedDegree(usize),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("pure Neumann data is not compatible: |int f + int g_N| = {residual:e}")]
    Incompatible { residual: f64 },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("flux is not equilibrated: max defect {max_defect:e}")]
    Unequilibrated { max_defect: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations (last relative change {last_change:e})")]
    EigenNoConvergence { iterations: usize, last_change: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
