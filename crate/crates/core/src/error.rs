use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector is not in the rational span of the module (residual {residual:.3e})")]
    Span { residual: f64 },
    #[error("exact rational evaluation unavailable: {0}")]
    Exactness(String),
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("point outside the frame domain: {0}")]
    Domain(String),
    #[error("mode budget exceeded: {needed} modes requested, budget {budget}")]
    Scale { needed: u128, budget: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("ambiguous eigenvalue grouping: gap {gap:.3e} below 10x tolerance {tol:.3e}")]
    ToleranceAmbiguity { gap: f64, tol: f64 },
    #[error("flow undefined: {0}")]
    FlowDomain(String),
    #[error("output mode misses the integer lattice by {miss:.3e}")]
    Integrality { miss: f64 },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
