use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::RewardError;
use crate::agent::AgentMode;
use crate::text::{answer_tokens, normalize_answer};
use crate::trajectory::Trajectory;

/// Word-level F1 over normalized bags of words.
pub fn f1_score(prediction: &str, reference: &str) -> f64 {
    let pred = answer_tokens(prediction);
    let gold = answer_tokens(reference);
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tok in &gold {
        *counts.entry(tok.as_str()).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for tok in &pred {
        if let Some(c) = counts.get_mut(tok.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// 1 when every turn parsed and the trajectory ends in a real answer.
pub fn format_reward(traj: &Trajectory) -> u8 {
    let ok = traj.valid && !traj.turns.is_empty() && traj.turns.iter().all(|t| t.format_ok) && traj.ends_with_answer();
    u8::from(ok)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JudgeError {
    #[error("judge unavailable: {0}")]
    Unavailable(String),
}

/// Correctness adjudication. Implementations must accept concurrent calls.
pub trait Judge: Send + Sync {
    fn judge(&self, question: &str, gold: &str, predicted: &str) -> Result<bool, JudgeError>;
}

/// Exact match after answer normalization.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatchJudge;

impl Judge for ExactMatchJudge {
    fn judge(&self, _question: &str, gold: &str, predicted: &str) -> Result<bool, JudgeError> {
        Ok(normalize_answer(gold) == normalize_answer(predicted))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub f1: f64,
    pub format_ok: u8,
    pub judge: Option<u8>,
    #[serde(rename = "final")]
    pub final_reward: f64,
}

/// Base models earn `format * f1`; reasoning models earn the judge verdict.
/// A missing answer is scored as the empty string.
pub fn compute_reward(
    traj: &Trajectory,
    gold: &str,
    mode: AgentMode,
    judge: &dyn Judge,
) -> Result<RewardRecord, RewardError> {
    let answer = traj.final_answer.as_deref().unwrap_or("");
    let f1 = f1_score(answer, gold);
    let format_ok = format_reward(traj);
    let record = match mode {
        AgentMode::BaseLm => {
            RewardRecord { f1, format_ok, judge: None, final_reward: if traj.valid { f64::from(format_ok) * f1 } else { 0.0 } }
        }
        AgentMode::ReasoningLm => {
            let verdict = u8::from(judge.judge(&traj.question, gold, answer)?);
            RewardRecord { f1, format_ok, judge: Some(verdict), final_reward: if traj.valid { f64::from(verdict) } else { 0.0 } }
        }
    };
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_conventions() {
        assert_eq!(f1_score("Paris", "paris"), 1.0);
        assert_eq!(f1_score("", "x"), 0.0);
        assert_eq!(f1_score("x", ""), 0.0);
        assert_eq!(f1_score("", ""), 1.0);
        assert_eq!(f1_score("the", "a"), 1.0);
    }

    #[test]
    fn f1_drops_articles_before_counting() {
        // "the" is dropped, leaving three prediction tokens: p = 1/3, r = 1.
        assert!((f1_score("the city of paris", "paris") - 0.5).abs() < 1e-12);
        // Four content tokens: p = 1/4, r = 1.
        assert!((f1_score("big city of paris", "paris") - 0.4).abs() < 1e-12);
    }

    #[test]
    fn f1_counts_multiplicity() {
        // pred {a:2}, gold {a:1}: common 1, p = 1/2, r = 1.
        assert!((f1_score("x x", "x") - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_match_judge_normalizes() {
        assert!(ExactMatchJudge.judge("q", "The Mice", "mice!").unwrap());
        assert!(!ExactMatchJudge.judge("q", "mice", "rats").unwrap());
    }
}
