use thiserror::Error;

use crate::algebra::AlgebraSignature;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch {
        left: AlgebraSignature,
        right: AlgebraSignature,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("element is not self-adjoint: ‖a − a*‖ = {defect:.3e} exceeds {threshold:.3e}")]
    NotSelfAdjoint { defect: f64, threshold: f64 },

    #[error("element is not positive: block {block} has eigenvalue {eigenvalue:.6e} below −{threshold:.3e}")]
    NotPositive {
        block: usize,
        eigenvalue: f64,
        threshold: f64,
    },

    #[error("block {block} is singular: smallest singular value {sigma_min:.3e} ≤ {threshold:.3e}")]
    Singular {
        block: usize,
        sigma_min: f64,
        threshold: f64,
    },

    #[error("state is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("state is not normalized: ‖⟨x,x⟩ − 1‖ = {defect:.3e} exceeds {threshold:.3e}")]
    NotNormalized { defect: f64, threshold: f64 },

    #[error("identity check failed: {label} residual {residual:.3e} exceeds {threshold:.3e}")]
    IdentityViolation {
        label: String,
        residual: f64,
        threshold: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("search failed: {0}")]
    Search(String),
}
