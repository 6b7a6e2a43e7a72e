//! Rewards, group-relative advantages and dynamic filtering.

mod advantage;
mod score;

pub use advantage::{
    dynamic_filter, group_advantages, group_advantages_with, is_degenerate, AdvantageNorm, Advantages,
    GroupBatch, ADVANTAGE_EPS,
};
pub use score::{compute_reward, f1_score, format_reward, ExactMatchJudge, Judge, JudgeError, RewardRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewardError {
    #[error("group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("{rewards} rewards for {trajectories} trajectories")]
    LengthMismatch { rewards: usize, trajectories: usize },
    #[error(transparent)]
    Judge(#[from] JudgeError),
}
