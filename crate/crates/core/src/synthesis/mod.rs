//! Question synthesis: fact injection, fuzzing, three-step verification
//! and the difficulty filter for open-source questions.

mod facts;
mod ops;
mod pipeline;
mod verify;
mod world;

pub use facts::{CorpusFactSource, FactSource, ScriptedFactSource, SourceFact};
pub use ops::{fuzz, inject};
pub use pipeline::{
    filter_opensource, open_source_decision, synthesize, DropReason, OpenSourceVerdict, SynthesisConfig,
    SynthesisOutcome, SynthesizedItem, OPEN_SOURCE_ROLLOUTS,
};
pub use verify::{
    difficulty_ok, verify, verify_with, Difficulty, QualityAssessment, RuleJudge, SynthesisJudge,
    VerificationReport, DEFAULT_ATTEMPTS, DEFAULT_MAX_ACCURACY,
};
pub use world::{resolve_answers, CorpusJudge, RecallLrm};

use crate::reward::{JudgeError, RewardError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("no known entity in the question")]
    NoEntityFound,
    #[error("fact source has no unused fact")]
    FactSourceEmpty,
    #[error("nothing to fuzz in the question")]
    NothingToFuzz,
    #[error("judge unavailable, item quarantined: {0}")]
    JudgeUnavailable(#[from] JudgeError),
    #[error("attempts must be at least 1")]
    InvalidAttempts,
    #[error("generation failed: {0}")]
    Generation(String),
}

impl From<RewardError> for SynthError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::Judge(j) => SynthError::JudgeUnavailable(j),
            other => SynthError::Generation(other.to_string()),
        }
    }
}
