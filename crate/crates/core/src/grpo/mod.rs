//! Softmax toy policy and the group-relative clipped policy loss.

mod loss;
mod policy;
pub mod toy;

pub use loss::{grpo_loss, surrogate_loss, LossOutput, Sequence, DEFAULT_CLIP_EPS};
pub use policy::{PolicyState, TokenSample, ToyPolicy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrpoError {
    #[error("non-finite loss: a taken action has zero probability")]
    NonFiniteLoss,
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("state has no legal action")]
    NoLegalAction,
    #[error("empty batch")]
    EmptyBatch,
}
