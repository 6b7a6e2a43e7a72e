//! Trajectory records and their JSONL log form.

use serde::{Deserialize, Serialize};

use crate::agent::{ActionKind, AgentAction, Generation, History, StepOutcome};
use crate::grpo::TokenSample;
use crate::reward::RewardRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub output: String,
    pub model_version: u64,
    pub tokens: Vec<TokenSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub output: String,
    pub action: AgentAction,
    pub effective: bool,
    pub format_ok: bool,
    pub forced: bool,
    pub tool_result: Option<String>,
    pub summary: Option<SummaryRecord>,
    pub model_version: u64,
    pub tokens: Vec<TokenSample>,
}

impl Turn {
    pub(crate) fn new(
        index: usize,
        generation: Generation,
        outcome: StepOutcome,
        tool_result: Option<String>,
        summary: Option<SummaryRecord>,
    ) -> Self {
        Self {
            index,
            output: generation.text,
            action: outcome.action,
            effective: outcome.effective,
            format_ok: outcome.format_ok,
            forced: outcome.forced,
            tool_result,
            summary,
            model_version: generation.model_version,
            tokens: generation.tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub qa_id: String,
    pub question: String,
    pub turns: Vec<Turn>,
    pub history: History,
    pub final_answer: Option<String>,
    pub valid: bool,
    pub failure: Option<String>,
    pub reward: Option<RewardRecord>,
    pub advantage: Option<f64>,
}

impl Trajectory {
    fn count_kind(&self, kind: ActionKind) -> usize {
        self.turns.iter().filter(|t| t.action.kind == kind).count()
    }

    pub fn search_calls(&self) -> usize {
        self.count_kind(ActionKind::Search)
    }

    pub fn tool_calls(&self) -> usize {
        self.count_kind(ActionKind::Search) + self.count_kind(ActionKind::Browse)
    }

    /// Version of every generation in order, page summaries included.
    pub fn model_versions(&self) -> Vec<u64> {
        let mut versions = Vec::new();
        for turn in &self.turns {
            versions.push(turn.model_version);
            if let Some(s) = &turn.summary {
                versions.push(s.model_version);
            }
        }
        versions
    }

    pub fn earliest_version(&self) -> Option<u64> {
        self.model_versions().into_iter().min()
    }

    pub fn distinct_versions(&self) -> usize {
        let mut v = self.model_versions();
        v.dedup();
        v.len()
    }

    /// All trainable token decisions, act and summary, in generation order.
    pub fn tokens(&self) -> Vec<&TokenSample> {
        let mut out = Vec::new();
        for turn in &self.turns {
            out.extend(turn.tokens.iter());
            if let Some(s) = &turn.summary {
                out.extend(s.tokens.iter());
            }
        }
        out
    }

    /// True when the last turn is an answer the model actually produced.
    pub fn ends_with_answer(&self) -> bool {
        self.turns
            .last()
            .is_some_and(|t| t.action.kind == ActionKind::Answer && t.effective && !t.forced)
    }

    pub fn to_log(&self) -> TrajectoryLog {
        TrajectoryLog {
            qa_id: self.qa_id.clone(),
            turns: self
                .turns
                .iter()
                .map(|t| TurnLog {
                    index: t.index,
                    output: t.output.clone(),
                    summary: t.summary.as_ref().map(|s| s.output.clone()),
                })
                .collect(),
            actions: self
                .turns
                .iter()
                .map(|t| ActionLog {
                    kind: t.action.kind,
                    payload: t.action.payload.clone(),
                    effective: t.effective,
                    forced: t.forced,
                })
                .collect(),
            tool_results: self.turns.iter().map(|t| t.tool_result.clone()).collect(),
            model_versions: self.model_versions(),
            reward: self.reward.clone(),
            advantage: self.advantage,
            valid: self.valid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnLog {
    pub index: usize,
    pub output: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionLog {
    pub kind: ActionKind,
    pub payload: String,
    pub effective: bool,
    pub forced: bool,
}

/// One line of the trajectory JSONL log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub qa_id: String,
    pub turns: Vec<TurnLog>,
    pub actions: Vec<ActionLog>,
    pub tool_results: Vec<Option<String>>,
    pub model_versions: Vec<u64>,
    pub reward: Option<RewardRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advantage: Option<f64>,
    pub valid: bool,
}

impl TrajectoryLog {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trajectory log serializes")
    }
}
