use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("{what}: {n} qubits exceeds the limit of {limit}")]
    SizeLimit {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid generator images: {0}")]
    InvalidGeneratorImages(String),

    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    Unnormalized { norm: f64 },

    #[error("operator is not a product across the cut (second Schmidt coefficient {lambda2:.3e})")]
    NotProduct { lambda2: f64 },

    #[error("unitary does not preserve products of Pauli strings: witness {witness} has second Schmidt coefficient {lambda2:.3e}")]
    NotProductPreserving { witness: String, lambda2: f64 },

    #[error("canonicalization failed: {0}")]
    Canonicalization(String),

    #[error("MPU closure on {n_sites} sites is not unitary (deviation {deviation:.3e})")]
    NotUnitaryClosure { n_sites: usize, deviation: f64 },

    #[error("leading eigenvalue is degenerate: |mu1| = {mu1:.6e}, |mu2| = {mu2:.6e}")]
    DegenerateLeadingEigenvalue { mu1: f64, mu2: f64 },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
