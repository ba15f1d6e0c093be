use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{n_qubits} qubits exceeds the dense limit of {limit}")]
    DimensionLimit { n_qubits: usize, limit: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("group closure exceeded {0} elements")]
    ClosureOverflow(usize),

    #[error("target is not reachable under this group (least-squares residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("generator `{label}` is not realized by its pulse (mismatch {mismatch:.3e})")]
    GeneratorMismatch { label: String, mismatch: f64 },

    #[error("time {t} outside [0, {end}]")]
    OutOfRange { t: f64, end: f64 },

    #[error("integrator failed to converge after {0} step doublings")]
    NonConvergent(usize),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("element not found in closure `{0}`")]
    ElementNotFound(String),

    #[error("scaling fit: {0}")]
    Fit(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
