//! Minimal training engine: dense tensors, a tape for reverse-mode
//! gradients, the handful of layers the two networks need, Adam, and a
//! central-difference gradient checker.

pub mod gradcheck;
pub mod kernels;
pub mod layers;
pub mod optim;
pub mod tape;
pub mod tensor;

use thiserror::Error;

pub use layers::LayerSpec;
pub use optim::{Adam, AdamConfig};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite gradient for {what}")]
    NonFiniteGradient { what: String },
}

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> NnError {
    NnError::ShapeMismatch {
        op,
        detail: detail.into(),
    }
}
