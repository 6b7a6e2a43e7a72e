//! Scripted model endpoints used as mocks and in simulation.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chain::{summarize_page, ChainProgress};
use super::corpus::{Corpus, URL_PREFIX};
use crate::agent::{EntryKind, Generation, GenerationClient, GenerationError, GenerationRequest, Purpose};
use crate::rng::{rng_for, stable_hash};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "script")]
pub enum PolicyScript {
    /// Searches each hop of the question's chain, then answers.
    OracleChain,
    /// Random well-formed actions.
    RandomTagged { answer_prob: f64 },
    /// Never emits a tag.
    Silent,
    /// Follows the chain from what it has observed but answers its current
    /// best guess with probability `answer_prob` on each turn.
    EagerChain { answer_prob: f64 },
    /// Replays fixed outputs by turn index.
    Fixed { outputs: Vec<String> },
}

/// Deterministic output for `(request.prompt, script, request.sample_seed)`.
pub fn scripted_generate(
    corpus: &Corpus,
    request: &GenerationRequest<'_>,
    script: &PolicyScript,
) -> Result<String, GenerationError> {
    if request.purpose == Purpose::Summarize {
        return Ok(summarize_page(request.page.unwrap_or_default()));
    }
    match script {
        PolicyScript::Silent => Ok(format!("I am still thinking about: {}", request.question)),
        PolicyScript::Fixed { outputs } => outputs
            .get(request.turn)
            .cloned()
            .ok_or_else(|| GenerationError::Failed(format!("script exhausted at turn {}", request.turn))),
        PolicyScript::OracleChain => {
            let chain = corpus
                .chain_for_question(request.question)
                .ok_or_else(|| GenerationError::Failed("question has no chain".into()))?;
            let facts = corpus.chain_facts(chain);
            let step = if request.purpose == Purpose::Act { request.turn } else { facts.len() };
            Ok(match facts.get(step) {
                Some(fact) => format!("<search>{} of {}</search>", fact.relation, fact.subject),
                None => format!("<answer>{}</answer>", chain.answer),
            })
        }
        PolicyScript::EagerChain { answer_prob } => {
            let progress = observed_progress(request)
                .ok_or_else(|| GenerationError::Failed("question is not a chain question".into()))?;
            // One draw per turn keyed only by the sample seed, so runs that
            // differ in budget rules see the same random sequence.
            let draw: f64 = rng_for(request.sample_seed, "script/eager", 0).random();
            if progress.complete() || draw < *answer_prob || request.purpose != Purpose::Act {
                Ok(format!("<answer>{}</answer>", progress.frontier()))
            } else {
                Ok(format!("<search>{}</search>", progress.next_query()))
            }
        }
        PolicyScript::RandomTagged { answer_prob } => {
            let mut rng = rng_for(request.sample_seed, "script/random", stable_hash(request.prompt));
            let words: Vec<&str> = request.question.split_whitespace().collect();
            let word = |rng: &mut _| {
                words.choose(rng).map(|w| w.trim_matches(|c: char| !c.is_alphanumeric())).unwrap_or("x").to_owned()
            };
            let roll: f64 = rng.random();
            if roll < *answer_prob || request.purpose != Purpose::Act {
                return Ok(format!("<answer>{}</answer>", word(&mut rng)));
            }
            Ok(match rng.random_range(0..3) {
                0 => format!("<search>{} {}</search>", word(&mut rng), word(&mut rng)),
                1 => format!("<access>{URL_PREFIX}{}</access>", word(&mut rng)),
                _ => format!("Considering {}.", word(&mut rng)),
            })
        }
    }
}

fn observed_progress(request: &GenerationRequest<'_>) -> Option<ChainProgress> {
    let observations = request
        .history
        .entries()
        .iter()
        .filter(|e| matches!(e.kind, EntryKind::SearchResult | EntryKind::PageSummary))
        .map(|e| e.text.as_str());
    ChainProgress::from_observations(request.question, observations)
}

/// [`GenerationClient`] over a script.
#[derive(Debug, Clone)]
pub struct ScriptedGenerator {
    corpus: Arc<Corpus>,
    script: PolicyScript,
    version: u64,
}

impl ScriptedGenerator {
    pub fn new(corpus: Arc<Corpus>, script: PolicyScript) -> Self {
        Self { corpus, script, version: 0 }
    }

    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self
    }
}

impl GenerationClient for ScriptedGenerator {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        let text = scripted_generate(&self.corpus, request, &self.script)?;
        Ok(Generation { text, model_version: self.version, tokens: Vec::new() })
    }
}
