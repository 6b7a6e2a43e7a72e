//! Judge and closed-book model for questions over the synthetic corpus.

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use rand::seq::IteratorRandom;
use rand::Rng;
use regex::Regex;

use super::verify::{QualityAssessment, SynthesisJudge};
use crate::agent::{Generation, GenerationClient, GenerationError, GenerationRequest};
use crate::qa::QaItem;
use crate::reward::{Judge, JudgeError};
use crate::rng::rng_for;
use crate::sim::{Corpus, FactTriple};
use crate::text::normalize_answer;

const ANY_ENTITY: &str = "a certain entity";
const DESCRIPTOR_PREFIX: &str = "the one whose ";

fn question_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^What is the (\w+(?: of the \w+)*) of (.+)\?$").expect("valid regex"))
}

fn all_facts(corpus: &Corpus) -> Vec<FactTriple> {
    corpus.pages().flat_map(|p| p.facts.iter().cloned()).collect()
}

fn all_entities(facts: &[FactTriple]) -> BTreeSet<String> {
    facts.iter().flat_map(|f| [f.subject.clone(), f.object.clone()]).collect()
}

fn resolve_ref(facts: &[FactTriple], text: &str) -> Option<BTreeSet<String>> {
    if text == ANY_ENTITY {
        return Some(all_entities(facts));
    }
    if let Some(rest) = text.strip_prefix(DESCRIPTOR_PREFIX) {
        let (relation, inner) = rest.split_once(" is ")?;
        let objects = resolve_ref(facts, inner)?;
        return Some(
            facts
                .iter()
                .filter(|f| f.relation == relation && objects.contains(&f.object))
                .map(|f| f.subject.clone())
                .collect(),
        );
    }
    if !text.is_empty() && text.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Some(BTreeSet::from([text.to_owned()]));
    }
    None
}

/// Every entity that satisfies a chain question, possibly with injected
/// descriptors and blurred names; `None` if the question does not parse.
pub fn resolve_answers(facts: &[FactTriple], question: &str) -> Option<BTreeSet<String>> {
    let caps = question_regex().captures(question.trim())?;
    let mut relations: Vec<&str> = caps.get(1)?.as_str().split(" of the ").collect();
    relations.reverse();
    let mut current = resolve_ref(facts, caps.get(2)?.as_str())?;
    for relation in relations {
        current = facts
            .iter()
            .filter(|f| f.relation == relation && current.contains(&f.subject))
            .map(|f| f.object.clone())
            .collect();
    }
    Some(current)
}

/// Judges synthesized chain questions by brute force over the corpus.
#[derive(Debug, Clone)]
pub struct CorpusJudge {
    facts: Vec<FactTriple>,
    statements: BTreeSet<String>,
}

impl CorpusJudge {
    pub fn new(corpus: &Corpus) -> Self {
        let facts = all_facts(corpus);
        let statements = facts.iter().map(FactTriple::sentence).collect();
        Self { facts, statements }
    }

    pub fn answers(&self, question: &str) -> Option<BTreeSet<String>> {
        resolve_answers(&self.facts, question)
    }
}

impl Judge for CorpusJudge {
    fn judge(&self, _question: &str, gold: &str, predicted: &str) -> Result<bool, JudgeError> {
        Ok(normalize_answer(gold) == normalize_answer(predicted))
    }
}

impl SynthesisJudge for CorpusJudge {
    fn assess(&self, item: &QaItem) -> Result<QualityAssessment, JudgeError> {
        let answers = self.answers(&item.question);
        let supported = item.ledger.facts().iter().all(|f| self.statements.contains(&f.statement));
        Ok(QualityAssessment {
            clarity_ok: answers.is_some(),
            grounded_ok: supported && answers.is_some_and(|a| a.contains(&item.answer)),
        })
    }

    fn is_valid_alternative(&self, item: &QaItem, candidate: &str) -> Result<bool, JudgeError> {
        if normalize_answer(candidate) == normalize_answer(&item.answer) {
            return Ok(false);
        }
        Ok(self.answers(&item.question).is_some_and(|a| a.contains(candidate.trim())))
    }

    fn known_alternatives(&self, item: &QaItem) -> Result<Vec<String>, JudgeError> {
        Ok(self.answers(&item.question).unwrap_or_default().into_iter().filter(|a| *a != item.answer).collect())
    }
}

/// Closed-book model that recalls the answer with probability
/// `recall^(1 + k)`, where `k` counts descriptors (1 each) and blurred
/// names (2 each) in the question; otherwise it guesses an entity.
#[derive(Debug, Clone)]
pub struct RecallLrm {
    facts: Arc<Vec<FactTriple>>,
    entities: Vec<String>,
    recall: f64,
}

impl RecallLrm {
    pub fn new(corpus: &Corpus, recall: f64) -> Self {
        let facts = all_facts(corpus);
        let entities = all_entities(&facts).into_iter().collect();
        Self { facts: Arc::new(facts), entities, recall }
    }

    pub fn recall_probability(&self, question: &str) -> f64 {
        let k = question.matches(DESCRIPTOR_PREFIX).count() + 2 * question.matches(ANY_ENTITY).count();
        self.recall.powi(1 + k as i32)
    }
}

impl GenerationClient for RecallLrm {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        let mut rng = rng_for(request.sample_seed, "lrm/recall", 0);
        let draw: f64 = rng.random();
        let known = resolve_answers(&self.facts, request.question).filter(|a| !a.is_empty());
        let answer = match known {
            Some(set) if draw < self.recall_probability(request.question) => {
                set.into_iter().choose(&mut rng).expect("non-empty")
            }
            _ => self.entities.iter().choose(&mut rng).cloned().unwrap_or_default(),
        };
        Ok(Generation { text: format!("<answer>{answer}</answer>"), model_version: 0, tokens: Vec::new() })
    }
}
