use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("energy z = {re} + {im}i lies on the cut [0, inf)")]
    EnergyOnCut { re: f64, im: f64 },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error(
        "image sum cannot reach tolerance {tol:e}: Re(kappa)*L = {kappa_l:.4}, about {required:.4} required"
    )]
    Convergence { tol: f64, kappa_l: f64, required: f64 },

    #[error("characteristic matrix is numerically singular: sigma_min = {sigma_min:e}, norm = {norm:e}")]
    Singular { sigma_min: f64, norm: f64 },

    #[error("counting orientation violated: {0}")]
    Orientation(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("site index {index} out of range for {len} sites")]
    Index { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("window mismatch: {0}")]
    Window(String),

    #[error("pairing mismatch: {0}")]
    Pairing(String),

    #[error("oracle did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
