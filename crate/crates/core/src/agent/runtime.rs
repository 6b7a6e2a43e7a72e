//! The trajectory state machine: generate, parse, dispatch, repeat.

use serde::{Deserialize, Serialize};

use super::action::{parse_action, strip_tags, ActionKind, AgentAction};
use super::history::{EntryKind, History};
use super::prompt::{build_prompt, AgentMode, BudgetConfig, ANSWER_ONLY_INSTRUCTION, SUMMARY_INSTRUCTION};
use super::AgentError;
use crate::grpo::TokenSample;
use crate::qa::QaItem;
use crate::rng::derive_seed;
use crate::trajectory::{SummaryRecord, Trajectory, Turn};

/// Default number of search hits requested per query.
pub const DEFAULT_SEARCH_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub snippet: String,
    pub url: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchResults {
    pub hits: Vec<SearchHit>,
}

impl SearchResults {
    pub fn render(&self) -> String {
        if self.hits.is_empty() {
            return "No results.".to_owned();
        }
        self.hits
            .iter()
            .enumerate()
            .map(|(i, hit)| format!("[{}] {}\n{}", i + 1, hit.url, hit.snippet))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ToolError {
    #[error("tool unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("generation failed: {0}")]
    Failed(String),
}

/// Search engine and browser. Implementations must accept concurrent calls.
pub trait ToolClient: Send + Sync {
    fn search(&self, query: &str, k: usize) -> Result<SearchResults, ToolError>;
    fn browse(&self, url: &str) -> Result<String, ToolError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    /// Regular agent turn.
    Act,
    /// Last allowed turn; the prompt carries the answer-only instruction.
    FinalAnswer,
    /// Summarize a fetched page.
    Summarize,
    /// Closed-book answer with no tools (data verification).
    DirectAnswer,
}

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub purpose: Purpose,
    pub prompt: &'a str,
    pub question: &'a str,
    pub history: &'a History,
    pub turn: usize,
    pub budget: &'a BudgetConfig,
    /// Page text, for `Purpose::Summarize`.
    pub page: Option<&'a str>,
    /// Per-request sampling seed; equal seeds must give equal outputs.
    pub sample_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub model_version: u64,
    /// Trainable token decisions behind `text`; empty for scripted models.
    #[serde(default)]
    pub tokens: Vec<TokenSample>,
}

/// A model endpoint. Implementations must accept concurrent calls.
pub trait GenerationClient: Send + Sync {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, GenerationError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub action: AgentAction,
    /// False when the action was rewritten by a budget rule or failed to parse.
    pub effective: bool,
    pub format_ok: bool,
    pub forced: bool,
}

/// Parse one model output and apply the turn budget rules.
///
/// An `Answer` before `min_turns` is suppressed into `Think`. On the last
/// allowed turn any non-answer becomes a forced answer built from the output
/// text with tags removed.
pub fn step(output: &str, budget: &BudgetConfig, turn: usize) -> Result<StepOutcome, AgentError> {
    if turn >= budget.turn_limit {
        return Err(AgentError::TurnLimitExceeded { turn, limit: budget.turn_limit });
    }
    let (mut action, format_ok) = match parse_action(output) {
        Ok(action) => (action, true),
        Err(AgentError::MalformedTag { .. }) => (AgentAction::think(output), false),
        Err(other) => return Err(other),
    };
    let mut effective = format_ok;

    if action.kind == ActionKind::Answer && turn < budget.min_turns {
        action = AgentAction::think(output);
        effective = false;
    }
    let mut forced = false;
    if turn + 1 == budget.turn_limit && action.kind != ActionKind::Answer {
        action = AgentAction::answer(strip_tags(output));
        effective = false;
        forced = true;
    }
    Ok(StepOutcome { action, effective, format_ok, forced })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TurnReport {
    /// Model generations issued this turn (one, plus one per page summary).
    pub generations: usize,
    pub tool_calls: usize,
    pub finished: bool,
}

/// Resumable trajectory execution, one turn per [`TrajectoryRunner::advance`].
#[derive(Debug, Clone)]
pub struct TrajectoryRunner {
    qa_id: String,
    question: String,
    mode: AgentMode,
    budget: BudgetConfig,
    search_k: usize,
    seed: u64,
    history: History,
    turns: Vec<Turn>,
    final_answer: Option<String>,
    valid: bool,
    done: bool,
    failure: Option<String>,
}

impl TrajectoryRunner {
    pub fn new(qa: &QaItem, mode: AgentMode, budget: BudgetConfig, seed: u64) -> Self {
        Self {
            qa_id: qa.id.clone(),
            question: qa.question.clone(),
            mode,
            budget,
            search_k: DEFAULT_SEARCH_K,
            seed,
            history: History::new(),
            turns: Vec::new(),
            final_answer: None,
            valid: true,
            done: false,
            failure: None,
        }
    }

    pub fn with_search_k(mut self, k: usize) -> Self {
        self.search_k = k;
        self
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn current_turn(&self) -> usize {
        self.turns.len()
    }

    fn abort(&mut self, reason: String) -> TurnReport {
        self.valid = false;
        self.done = true;
        self.failure = Some(reason);
        TurnReport { finished: true, ..TurnReport::default() }
    }

    /// Execute one turn: a generation, its tool call, and any page summary.
    pub fn advance(&mut self, policy: &dyn GenerationClient, tools: &dyn ToolClient) -> TurnReport {
        if self.done {
            return TurnReport { finished: true, ..TurnReport::default() };
        }
        let turn = self.turns.len();
        let final_turn = turn + 1 == self.budget.turn_limit;
        let mut prompt = build_prompt(self.mode, &self.history, &self.budget);
        if final_turn {
            prompt.push_str("\n\n");
            prompt.push_str(ANSWER_ONLY_INSTRUCTION);
        }
        let request = GenerationRequest {
            purpose: if final_turn { Purpose::FinalAnswer } else { Purpose::Act },
            prompt: &prompt,
            question: &self.question,
            history: &self.history,
            turn,
            budget: &self.budget,
            page: None,
            sample_seed: derive_seed(self.seed, "act", turn as u64),
        };
        let generation = match policy.generate(&request) {
            Ok(g) => g,
            Err(e) => {
                let mut report = self.abort(e.to_string());
                report.generations = 1;
                return report;
            }
        };
        let mut report = TurnReport { generations: 1, ..TurnReport::default() };

        let outcome = step(&generation.text, &self.budget, turn).expect("turn below limit");
        self.history
            .push(EntryKind::ModelText, turn, generation.text.clone())
            .expect("turns are appended in order");

        let mut tool_result = None;
        let mut summary = None;
        match outcome.action.kind {
            ActionKind::Search => {
                report.tool_calls = 1;
                self.push(EntryKind::ToolCall, turn, format!("<search>{}</search>", outcome.action.payload));
                let observation = match tools.search(&outcome.action.payload, self.search_k) {
                    Ok(results) => results.render(),
                    Err(e) => format!("[error] {e}"),
                };
                self.push(EntryKind::SearchResult, turn, observation.clone());
                tool_result = Some(observation);
            }
            ActionKind::Browse => {
                report.tool_calls = 1;
                self.push(EntryKind::ToolCall, turn, format!("<access>{}</access>", outcome.action.payload));
                match tools.browse(&outcome.action.payload) {
                    Ok(page) => {
                        let summary_prompt = format!(
                            "{SUMMARY_INSTRUCTION}\nQuestion: {}\n\n{page}",
                            self.question
                        );
                        let request = GenerationRequest {
                            purpose: Purpose::Summarize,
                            prompt: &summary_prompt,
                            question: &self.question,
                            history: &self.history,
                            turn,
                            budget: &self.budget,
                            page: Some(&page),
                            sample_seed: derive_seed(self.seed, "summary", turn as u64),
                        };
                        report.generations += 1;
                        match policy.generate(&request) {
                            Ok(g) => {
                                self.push(EntryKind::PageSummary, turn, g.text.clone());
                                tool_result = Some(page);
                                summary = Some(SummaryRecord {
                                    output: g.text,
                                    model_version: g.model_version,
                                    tokens: g.tokens,
                                });
                            }
                            Err(e) => {
                                self.push(EntryKind::PageSummary, turn, format!("[error] {e}"));
                                self.turns.push(Turn::new(turn, generation, outcome, Some(page), None));
                                self.abort(e.to_string());
                                report.finished = true;
                                return report;
                            }
                        }
                    }
                    Err(e) => {
                        let observation = format!("[error] {e}");
                        self.push(EntryKind::PageSummary, turn, observation.clone());
                        tool_result = Some(observation);
                    }
                }
            }
            ActionKind::Answer => {
                self.final_answer = Some(outcome.action.payload.clone());
                self.done = true;
            }
            ActionKind::Think | ActionKind::Summarize => {}
        }
        self.turns.push(Turn::new(turn, generation, outcome, tool_result, summary));
        if self.turns.len() >= self.budget.turn_limit {
            self.done = true;
        }
        report.finished = self.done;
        report
    }

    fn push(&mut self, kind: EntryKind, turn: usize, text: String) {
        self.history.push(kind, turn, text).expect("turns are appended in order");
    }

    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            qa_id: self.qa_id,
            question: self.question,
            turns: self.turns,
            history: self.history,
            final_answer: self.final_answer,
            valid: self.valid,
            failure: self.failure,
            reward: None,
            advantage: None,
        }
    }
}

/// Run a whole trajectory against the given clients.
pub fn run_trajectory(
    qa: &QaItem,
    mode: AgentMode,
    policy: &dyn GenerationClient,
    tools: &dyn ToolClient,
    budget: &BudgetConfig,
    seed: u64,
) -> Result<Trajectory, AgentError> {
    budget.validate()?;
    if qa.question.trim().is_empty() {
        return Err(AgentError::EmptyQuestion);
    }
    let mut runner = TrajectoryRunner::new(qa, mode, *budget, seed);
    while !runner.is_done() {
        runner.advance(policy, tools);
    }
    Ok(runner.into_trajectory())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(limit: usize, min: usize) -> BudgetConfig {
        BudgetConfig { turn_limit: limit, min_turns: min, ..BudgetConfig::base() }
    }

    #[test]
    fn early_answer_is_suppressed_under_min_turns() {
        let out = step("<answer>x</answer>", &budget(8, 4), 1).unwrap();
        assert_eq!(out.action.kind, ActionKind::Think);
        assert!(!out.effective);
        assert!(out.format_ok);
    }

    #[test]
    fn answer_passes_without_min_turns() {
        let out = step("<answer>x</answer>", &budget(8, 0), 1).unwrap();
        assert_eq!(out.action, AgentAction::answer("x"));
        assert!(out.effective);
    }

    #[test]
    fn last_turn_forces_an_answer() {
        let out = step("<search>q</search>", &budget(8, 0), 7).unwrap();
        assert_eq!(out.action.kind, ActionKind::Answer);
        assert_eq!(out.action.payload, "q");
        assert!(out.forced && !out.effective);
    }

    #[test]
    fn turn_past_limit_is_an_error() {
        assert!(matches!(
            step("x", &budget(8, 0), 8),
            Err(AgentError::TurnLimitExceeded { turn: 8, limit: 8 })
        ));
    }

    #[test]
    fn malformed_output_becomes_think_without_format_credit() {
        let out = step("<search>oops", &budget(8, 0), 0).unwrap();
        assert_eq!(out.action.kind, ActionKind::Think);
        assert!(!out.format_ok && !out.effective);
    }
}
