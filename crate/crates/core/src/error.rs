use thiserror::Error;

/// Errors raised across the solver stack.
#[derive(Debug, Error)]
pub enum MfgError {
    #[error("placement mismatch: expected {expected}, got {found}")]
    PlacementMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("infeasible input: {0}")]
    InfeasibleInput(String),
    #[error("terminal condition violated: max |phi(T) - phi_T| = {0:e}")]
    TerminalMismatch(f64),
    #[error("inner prox failed to converge after {iters} iterations (residual {residual:e})")]
    InnerProxFailure { iters: usize, residual: f64 },
    #[error(
        "no convergence after {iterations} iterations (relative gap {relative_gap:e}, feasibility {feasibility:e})"
    )]
    NonConvergence {
        iterations: usize,
        relative_gap: f64,
        feasibility: f64,
    },
    #[error("oracle requires r = 2, c = 1 and a power coupling: {0}")]
    WrongFamily(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MfgError>;
