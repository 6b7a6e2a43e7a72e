use serde::{Deserialize, Serialize};

use super::facts::FactSource;
use super::ops::{fuzz, inject};
use super::verify::{verify_with, SynthesisJudge, VerificationReport, DEFAULT_ATTEMPTS, DEFAULT_MAX_ACCURACY};
use super::SynthError;
use crate::agent::GenerationClient;
use crate::qa::{QaItem, SynthKind};
use crate::reward::Judge;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub max_rounds: usize,
    pub per_seed_keep: usize,
    pub attempts: usize,
    pub max_accuracy: f64,
    /// Inject only until the ledger holds this many facts, then alternate.
    pub injection_floor: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            max_rounds: 9,
            per_seed_keep: 3,
            attempts: DEFAULT_ATTEMPTS,
            max_accuracy: DEFAULT_MAX_ACCURACY,
            injection_floor: 3,
        }
    }
}

/// An emitted question with the verification it passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizedItem {
    #[serde(flatten)]
    pub item: QaItem,
    pub verification: VerificationReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOutcome {
    pub kept: Vec<SynthesizedItem>,
    /// Variants produced and verified.
    pub verified: usize,
    pub passed: usize,
    /// Variants whose verification could not complete.
    pub quarantined: usize,
    pub seed_rejected: bool,
}

fn next_action(item: &QaItem, floor: usize) -> SynthKind {
    if item.ledger.len() < floor {
        return SynthKind::Injection;
    }
    match item.lineage.last().map(|a| a.kind) {
        Some(SynthKind::Injection) => SynthKind::Fuzz,
        _ => SynthKind::Injection,
    }
}

fn apply(kind: SynthKind, item: &QaItem, source: &dyn FactSource) -> Result<QaItem, SynthError> {
    match kind {
        SynthKind::Injection => inject(item, source),
        SynthKind::Fuzz => fuzz(item),
    }
}

/// Iteratively rewrites a seed question, verifying each variant, and keeps
/// the hardest passing variants (lowest closed-book accuracy, then latest).
pub fn synthesize(
    seed: &QaItem,
    cfg: &SynthesisConfig,
    source: &dyn FactSource,
    judge: &dyn SynthesisJudge,
    lrm: &dyn GenerationClient,
) -> Result<SynthesisOutcome, SynthError> {
    let mut outcome = SynthesisOutcome::default();
    let quality = judge.assess(seed)?;
    if !(quality.clarity_ok && quality.grounded_ok) {
        outcome.seed_rejected = true;
        return Ok(outcome);
    }
    let mut current = seed.clone();
    let mut passing: Vec<SynthesizedItem> = Vec::new();
    for _ in 0..cfg.max_rounds {
        let preferred = next_action(&current, cfg.injection_floor);
        let other = match preferred {
            SynthKind::Injection => SynthKind::Fuzz,
            SynthKind::Fuzz => SynthKind::Injection,
        };
        let next = match apply(preferred, &current, source) {
            Ok(next) => next,
            Err(SynthError::NoEntityFound | SynthError::FactSourceEmpty | SynthError::NothingToFuzz) => {
                match apply(other, &current, source) {
                    Ok(next) => next,
                    Err(SynthError::NoEntityFound | SynthError::FactSourceEmpty | SynthError::NothingToFuzz) => break,
                    Err(e) => return Err(e),
                }
            }
            Err(e) => return Err(e),
        };
        current = next;
        let mut variant = current.clone();
        variant.id = format!("{}-r{}", seed.id, current.last_round());
        match verify_with(&variant, judge, lrm, cfg.attempts, cfg.max_accuracy) {
            Ok(report) => {
                outcome.verified += 1;
                if report.passed {
                    outcome.passed += 1;
                    passing.push(SynthesizedItem { item: variant, verification: report });
                }
            }
            Err(SynthError::JudgeUnavailable(_)) => outcome.quarantined += 1,
            Err(e) => return Err(e),
        }
    }
    passing.sort_by(|a, b| {
        a.verification
            .difficulty
            .correct
            .cmp(&b.verification.difficulty.correct)
            .then(b.item.last_round().cmp(&a.item.last_round()))
    });
    passing.truncate(cfg.per_seed_keep);
    passing.sort_by_key(|s| s.item.last_round());
    outcome.kept = passing;
    Ok(outcome)
}

pub const OPEN_SOURCE_ROLLOUTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// No rollout found the answer.
    NoCorrect,
    /// Half or more of the rollouts were correct.
    TooEasy,
    /// A correct rollout needed at most one search.
    ShallowSearch,
}

/// Keep/drop rule for open-source questions given `correct` of `total`
/// rollouts and the fewest searches used by a correct rollout.
pub fn open_source_decision(correct: usize, total: usize, min_correct_searches: Option<usize>) -> Result<(), DropReason> {
    if correct == 0 {
        return Err(DropReason::NoCorrect);
    }
    if correct * 2 >= total {
        return Err(DropReason::TooEasy);
    }
    if min_correct_searches.is_some_and(|m| m <= 1) {
        return Err(DropReason::ShallowSearch);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenSourceVerdict {
    pub keep: bool,
    pub correct: usize,
    pub total: usize,
    pub min_correct_searches: Option<usize>,
    pub reason: Option<DropReason>,
}

pub fn filter_opensource(qa: &QaItem, rollouts: &[Trajectory], judge: &dyn Judge) -> Result<OpenSourceVerdict, SynthError> {
    let mut correct = 0;
    let mut min_correct_searches: Option<usize> = None;
    for traj in rollouts {
        let answer = traj.final_answer.as_deref().unwrap_or("");
        if judge.judge(&qa.question, &qa.answer, answer)? {
            correct += 1;
            let searches = traj.search_calls();
            min_correct_searches = Some(min_correct_searches.map_or(searches, |m| m.min(searches)));
        }
    }
    let decision = open_source_decision(correct, rollouts.len(), min_correct_searches);
    Ok(OpenSourceVerdict {
        keep: decision.is_ok(),
        correct,
        total: rollouts.len(),
        min_correct_searches,
        reason: decision.err(),
    })
}
