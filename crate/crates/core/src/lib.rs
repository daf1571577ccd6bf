//! Constraint compilation and commit-prove-verify for a DWT → PCA → RBF-SVM
//! inference pipeline.
//!
//! The pipeline is evaluated in Q31.32 fixed point, compiled into a rank-1
//! constraint system over a prime field, and checked by a pluggable backend.
//! [`pipeline::ReferenceBackend`] ships the full assignment and re-checks it
//! directly; it is complete and sound but neither succinct nor zero-knowledge.

pub mod accounting;
pub mod dwt;
pub mod field;
pub mod fixed;
pub mod gadgets;
pub mod model;
pub mod pca;
pub mod pipeline;
pub mod r1cs;
pub mod svm;
pub mod zkpoa;

pub use field::{Fe, PrimeField};
pub use fixed::{ExpFxp, Fxp};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid modulus: {0}")]
    Modulus(String),
    #[error("inversion of zero")]
    DivisionByZero,
    #[error("out of range: {0}")]
    Range(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("constraint system: {0}")]
    System(String),
    #[error("constraint not satisfied: {0}")]
    Unsatisfied(String),
    #[error("prover refused: {0}")]
    Refused(String),
    #[error("unsupported parameter: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
