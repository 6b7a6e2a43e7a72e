//! Avg@k / Pass@k evaluation and minimum-turn sweeps.

use serde::{Deserialize, Serialize};

use crate::agent::{run_trajectory, AgentError, AgentMode, BudgetConfig, GenerationClient, ToolClient};
use crate::qa::QaItem;
use crate::reward::{f1_score, Judge, JudgeError};
use crate::rng::{derive_seed, stable_hash};

pub const DEFAULT_K: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("eval set is empty")]
    EmptyEvalSet,
    #[error("malformed eval item {id}: {reason}")]
    MalformedItem { id: String, reason: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub mode: AgentMode,
    pub budget: BudgetConfig,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(seed: u64) -> Self {
        Self { k: DEFAULT_K, mode: AgentMode::BaseLm, budget: BudgetConfig::base(), seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub predictions: Vec<String>,
    pub correct: Vec<bool>,
    pub f1: Vec<f64>,
    pub turns: Vec<usize>,
    pub tool_calls: Vec<usize>,
}

impl QuestionRecord {
    pub fn successes(&self) -> usize {
        self.correct.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub min_turns: usize,
    pub questions: usize,
    pub avg_at_k: f64,
    pub pass_at_k: f64,
    pub mean_f1: f64,
    pub records: Vec<QuestionRecord>,
}

/// Avg@k and Pass@k from per-question trial outcomes.
pub fn avg_pass_at_k(outcomes: &[Vec<bool>]) -> (f64, f64) {
    if outcomes.is_empty() {
        return (0.0, 0.0);
    }
    let n = outcomes.len() as f64;
    let avg = outcomes
        .iter()
        .map(|o| if o.is_empty() { 0.0 } else { o.iter().filter(|&&c| c).count() as f64 / o.len() as f64 })
        .sum::<f64>()
        / n;
    let pass = outcomes.iter().filter(|o| o.iter().any(|&c| c)).count() as f64 / n;
    (avg, pass)
}

pub fn validate_eval_set(items: &[QaItem]) -> Result<(), EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    for item in items {
        let reason = if item.id.trim().is_empty() {
            "empty id"
        } else if item.question.trim().is_empty() {
            "empty question"
        } else if item.answer.trim().is_empty() {
            "empty answer"
        } else {
            continue;
        };
        return Err(EvalError::MalformedItem { id: item.id.clone(), reason: reason.into() });
    }
    Ok(())
}

/// Trial seeds depend on the question and trial index only, so runs that
/// differ in budget see the same random draws.
pub fn trial_seed(root: u64, qa_id: &str, trial: usize) -> u64 {
    derive_seed(derive_seed(root, "eval", stable_hash(qa_id)), "trial", trial as u64)
}

/// Run `cfg.k` rollouts per question and score them with `judge`.
pub fn evaluate(
    items: &[QaItem],
    policy: &dyn GenerationClient,
    tools: &dyn ToolClient,
    judge: &dyn Judge,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if cfg.k == 0 {
        return Err(EvalError::InvalidK);
    }
    validate_eval_set(items)?;
    cfg.budget.validate()?;
    let mut records = Vec::with_capacity(items.len());
    for item in items {
        let mut record = QuestionRecord {
            id: item.id.clone(),
            question: item.question.clone(),
            answer: item.answer.clone(),
            predictions: Vec::new(),
            correct: Vec::new(),
            f1: Vec::new(),
            turns: Vec::new(),
            tool_calls: Vec::new(),
        };
        for trial in 0..cfg.k {
            let traj = run_trajectory(item, cfg.mode, policy, tools, &cfg.budget, trial_seed(cfg.seed, &item.id, trial))?;
            let predicted = traj.final_answer.clone().unwrap_or_default();
            let correct = traj.valid && judge.judge(&item.question, &item.answer, &predicted)?;
            record.f1.push(f1_score(&predicted, &item.answer));
            record.predictions.push(predicted);
            record.correct.push(correct);
            record.turns.push(traj.turns.len());
            record.tool_calls.push(traj.tool_calls());
        }
        records.push(record);
    }
    let outcomes: Vec<Vec<bool>> = records.iter().map(|r| r.correct.clone()).collect();
    let (avg_at_k, pass_at_k) = avg_pass_at_k(&outcomes);
    let f1s: Vec<f64> = records.iter().flat_map(|r| r.f1.iter().copied()).collect();
    Ok(EvalReport {
        k: cfg.k,
        min_turns: cfg.budget.min_turns,
        questions: records.len(),
        avg_at_k,
        pass_at_k,
        mean_f1: f1s.iter().sum::<f64>() / f1s.len() as f64,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub min_turns: usize,
    pub avg_at_k: f64,
    pub pass_at_k: f64,
    pub mean_turns: f64,
}

impl SweepPoint {
    pub fn from_report(report: &EvalReport) -> Self {
        let turns: Vec<usize> = report.records.iter().flat_map(|r| r.turns.iter().copied()).collect();
        Self {
            min_turns: report.min_turns,
            avg_at_k: report.avg_at_k,
            pass_at_k: report.pass_at_k,
            mean_turns: turns.iter().sum::<usize>() as f64 / turns.len().max(1) as f64,
        }
    }
}

/// Evaluate once per minimum-turn setting.
pub fn min_turn_sweep(
    items: &[QaItem],
    policy: &dyn GenerationClient,
    tools: &dyn ToolClient,
    judge: &dyn Judge,
    cfg: &EvalConfig,
    min_turns: &[usize],
) -> Result<Vec<SweepPoint>, EvalError> {
    min_turns
        .iter()
        .map(|&m| {
            let run = EvalConfig { budget: BudgetConfig { min_turns: m, ..cfg.budget }, ..*cfg };
            Ok(SweepPoint::from_report(&evaluate(items, policy, tools, judge, &run)?))
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("min_turns,avg_at_k,pass_at_k,mean_turns\n");
    for p in points {
        out.push_str(&format!("{},{:.6},{:.6},{:.4}\n", p.min_turns, p.avg_at_k, p.pass_at_k, p.mean_turns));
    }
    out
}

pub fn records_jsonl(report: &EvalReport) -> String {
    report
        .records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_solved_every_trial() {
        let outcomes = vec![vec![true; 4], vec![false; 4]];
        assert_eq!(avg_pass_at_k(&outcomes), (0.5, 0.5));
    }

    #[test]
    fn pass_counts_any_success() {
        let outcomes = vec![vec![true, false, false, false], vec![false; 4]];
        let (avg, pass) = avg_pass_at_k(&outcomes);
        assert!((avg - 0.125).abs() < 1e-12);
        assert_eq!(pass, 0.5);
    }

    #[test]
    fn malformed_items_are_reported() {
        let items = vec![QaItem::new("a", "q?", "")];
        assert!(matches!(validate_eval_set(&items), Err(EvalError::MalformedItem { .. })));
        assert_eq!(validate_eval_set(&[]), Err(EvalError::EmptyEvalSet));
    }
}
