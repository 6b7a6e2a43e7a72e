use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::agent::{
    parse_action, strip_tags, ActionKind, BudgetConfig, GenerationClient, GenerationRequest, History, Purpose,
};
use crate::qa::QaItem;
use crate::reward::{Judge, JudgeError};
use crate::rng::{derive_seed, stable_hash};
use crate::text::normalize_answer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityAssessment {
    pub clarity_ok: bool,
    pub grounded_ok: bool,
}

/// Judge with the extra checks used when vetting synthesized questions.
pub trait SynthesisJudge: Judge {
    /// Is the question clear, and is the answer supported by the ledger?
    fn assess(&self, item: &QaItem) -> Result<QualityAssessment, JudgeError>;
    /// Would `candidate` also be a correct answer to the question?
    fn is_valid_alternative(&self, item: &QaItem, candidate: &str) -> Result<bool, JudgeError>;
    /// Other answers the judge can name on its own; they are checked like sampled ones.
    fn known_alternatives(&self, _item: &QaItem) -> Result<Vec<String>, JudgeError> {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Difficulty {
    pub attempts: usize,
    pub correct: usize,
}

impl Difficulty {
    pub fn accuracy(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.correct as f64 / self.attempts as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub clarity_ok: bool,
    pub grounded_ok: bool,
    pub difficulty: Difficulty,
    pub uniqueness_ok: bool,
    /// Confirmed alternative answers, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<String>,
    pub passed: bool,
}

/// Highest closed-book accuracy a question may have and still pass.
pub const DEFAULT_MAX_ACCURACY: f64 = 0.5;
pub const DEFAULT_ATTEMPTS: usize = 8;

pub fn difficulty_ok(d: Difficulty, max_accuracy: f64) -> bool {
    d.correct < d.attempts && (d.correct as f64) <= max_accuracy * d.attempts as f64
}

/// Extracts the answer from a closed-book generation.
fn direct_answer(text: &str) -> String {
    match parse_action(text) {
        Ok(action) if action.kind == ActionKind::Answer => action.payload,
        _ => strip_tags(text).trim().to_owned(),
    }
}

/// Three-step check: clarity and grounding, closed-book difficulty over
/// `attempts` tool-free answers, and uniqueness of the gold answer.
pub fn verify(
    item: &QaItem,
    judge: &dyn SynthesisJudge,
    lrm: &dyn GenerationClient,
    attempts: usize,
) -> Result<VerificationReport, SynthError> {
    verify_with(item, judge, lrm, attempts, DEFAULT_MAX_ACCURACY)
}

pub fn verify_with(
    item: &QaItem,
    judge: &dyn SynthesisJudge,
    lrm: &dyn GenerationClient,
    attempts: usize,
    max_accuracy: f64,
) -> Result<VerificationReport, SynthError> {
    if attempts == 0 {
        return Err(SynthError::InvalidAttempts);
    }
    let quality = judge.assess(item)?;

    let history = History::new();
    let budget = BudgetConfig::reasoning();
    let key = stable_hash(&format!("{}\n{}", item.id, item.question));
    let mut correct = 0;
    let mut wrong: Vec<String> = Vec::new();
    for attempt in 0..attempts {
        let request = GenerationRequest {
            purpose: Purpose::DirectAnswer,
            prompt: &item.question,
            question: &item.question,
            history: &history,
            turn: 0,
            budget: &budget,
            page: None,
            sample_seed: derive_seed(key, "verify", attempt as u64),
        };
        let text = lrm.generate(&request).map_err(|e| SynthError::Generation(e.to_string()))?.text;
        let answer = direct_answer(&text);
        if judge.judge(&item.question, &item.answer, &answer)? {
            correct += 1;
        } else if !normalize_answer(&answer).is_empty()
            && !wrong.iter().any(|w| normalize_answer(w) == normalize_answer(&answer))
        {
            wrong.push(answer);
        }
    }

    for candidate in judge.known_alternatives(item)? {
        let norm = normalize_answer(&candidate);
        if norm != normalize_answer(&item.answer) && !wrong.iter().any(|w| normalize_answer(w) == norm) {
            wrong.push(candidate);
        }
    }
    let mut alternatives = Vec::new();
    for candidate in wrong {
        if judge.is_valid_alternative(item, &candidate)? {
            alternatives.push(candidate);
        }
    }
    let difficulty = Difficulty { attempts, correct };
    let uniqueness_ok = alternatives.is_empty();
    let passed = quality.clarity_ok && quality.grounded_ok && uniqueness_ok && difficulty_ok(difficulty, max_accuracy);
    Ok(VerificationReport {
        clarity_ok: quality.clarity_ok,
        grounded_ok: quality.grounded_ok,
        difficulty,
        uniqueness_ok,
        alternatives,
        passed,
    })
}

/// Mock judge: exact-match correctness, fixed quality verdicts and a fixed
/// list of accepted alternative answers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleJudge {
    pub reject_clarity: bool,
    pub reject_grounding: bool,
    pub alternatives: Vec<String>,
    pub unavailable: bool,
}

impl RuleJudge {
    pub fn approving() -> Self {
        Self::default()
    }
}

impl Judge for RuleJudge {
    fn judge(&self, _question: &str, gold: &str, predicted: &str) -> Result<bool, JudgeError> {
        if self.unavailable {
            return Err(JudgeError::Unavailable("rule judge switched off".into()));
        }
        Ok(normalize_answer(gold) == normalize_answer(predicted))
    }
}

impl SynthesisJudge for RuleJudge {
    fn assess(&self, _item: &QaItem) -> Result<QualityAssessment, JudgeError> {
        if self.unavailable {
            return Err(JudgeError::Unavailable("rule judge switched off".into()));
        }
        Ok(QualityAssessment { clarity_ok: !self.reject_clarity, grounded_ok: !self.reject_grounding })
    }

    fn is_valid_alternative(&self, _item: &QaItem, candidate: &str) -> Result<bool, JudgeError> {
        Ok(self.alternatives.iter().any(|a| normalize_answer(a) == normalize_answer(candidate)))
    }
}
