//! Search-agent runtime: action parsing, history management, prompting and
//! the turn loop.

mod action;
mod history;
mod prompt;
mod runtime;

pub use action::{parse_action, strip_tags, ActionKind, AgentAction};
pub use history::{EntryKind, History, HistoryEntry};
pub use prompt::{
    build_prompt, compact_entries, history_portion, prompt_entries, render_entries, rendered_chars,
    window_suffix, AgentMode, BudgetConfig, ANSWER_ONLY_INSTRUCTION, COMPACT_THOUGHT_CHARS,
    SUMMARY_INSTRUCTION, SYSTEM_PREAMBLE,
};
pub use runtime::{
    run_trajectory, step, Generation, GenerationClient, GenerationError, GenerationRequest, Purpose,
    SearchHit, SearchResults, StepOutcome, ToolClient, ToolError, TrajectoryRunner, TurnReport,
    DEFAULT_SEARCH_K,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("malformed {tag} tag: {reason}")]
    MalformedTag { tag: String, reason: &'static str },
    #[error("turn {turn} is outside the turn limit {limit}")]
    TurnLimitExceeded { turn: usize, limit: usize },
    #[error("history entry for turn {turn} after turn {last}")]
    HistoryOrder { last: usize, turn: usize },
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("question is empty")]
    EmptyQuestion,
}
