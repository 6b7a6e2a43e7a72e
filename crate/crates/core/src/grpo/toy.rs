//! The toy search agent: a [`ToyPolicy`] over a six-symbol action alphabet
//! decoded into tagged text for the synthetic world.

use std::sync::Arc;

use super::{PolicyState, ToyPolicy};
use crate::agent::{EntryKind, Generation, GenerationClient, GenerationError, GenerationRequest, History, Purpose};
use crate::rng::rng_for;
use crate::sim::chain::{summarize_page, ChainProgress};
use crate::sim::URL_PREFIX;
use crate::weights::WeightStore;

pub const THINK: usize = 0;
pub const SEARCH: usize = 1;
pub const BROWSE: usize = 2;
pub const ANSWER: usize = 3;
pub const SUMMARIZE_FACTS: usize = 4;
pub const SUMMARIZE_BRIEF: usize = 5;
pub const N_ACTIONS: usize = 6;
pub const N_FEATURES: usize = 6;
pub const ACTION_NAMES: [&str; N_ACTIONS] = ["think", "search", "browse", "answer", "summarize_facts", "summarize_brief"];

const BRIEF_CHARS: usize = 80;

/// Initial policy: near-uniform with a preference for answering at once.
pub fn initial_policy(answer_bias: f64) -> ToyPolicy {
    let mut policy = ToyPolicy::zeros(N_ACTIONS, N_FEATURES);
    let idx = policy.index(ANSWER, 0);
    policy.params_mut()[idx] = answer_bias;
    policy
}

fn observations(history: &History) -> impl Iterator<Item = &str> {
    history
        .entries()
        .iter()
        .filter(|e| matches!(e.kind, EntryKind::SearchResult | EntryKind::PageSummary))
        .map(|e| e.text.as_str())
}

/// URL of the first hit in the latest observation, if that observation is
/// an unvisited search result.
fn pending_hit(history: &History) -> Option<String> {
    let last = history
        .entries()
        .iter()
        .rev()
        .find(|e| matches!(e.kind, EntryKind::SearchResult | EntryKind::PageSummary))?;
    if last.kind != EntryKind::SearchResult {
        return None;
    }
    last.text.split_whitespace().find(|w| w.starts_with(URL_PREFIX)).map(str::to_owned)
}

/// Features: bias, nothing resolved, partly resolved, fully resolved,
/// unvisited hit available, fraction of the turn budget used.
pub fn features(question: &str, history: &History, turn: usize, turn_limit: usize) -> Vec<f64> {
    let (resolved, hops) = ChainProgress::from_observations(question, observations(history))
        .map_or((0, 1), |p| (p.resolved.len(), p.hops()));
    let flag = |b: bool| f64::from(u8::from(b));
    vec![
        1.0,
        flag(resolved == 0),
        flag(resolved > 0 && resolved < hops),
        flag(resolved >= hops),
        flag(pending_hit(history).is_some()),
        turn as f64 / turn_limit.max(1) as f64,
    ]
}

fn act_mask() -> Vec<bool> {
    (0..N_ACTIONS).map(|a| a < SUMMARIZE_FACTS).collect()
}

fn summary_mask() -> Vec<bool> {
    (0..N_ACTIONS).map(|a| a >= SUMMARIZE_FACTS).collect()
}

pub fn decision_state(request: &GenerationRequest<'_>) -> PolicyState {
    let features = features(request.question, request.history, request.turn, request.budget.turn_limit);
    let allowed = if request.purpose == Purpose::Summarize { summary_mask() } else { act_mask() };
    PolicyState { features, allowed }
}

/// Text for an action symbol in the context of a request.
pub fn render(action: usize, request: &GenerationRequest<'_>) -> String {
    let progress = ChainProgress::from_observations(request.question, observations(request.history));
    match action {
        SEARCH => {
            let query = progress.as_ref().map_or_else(|| request.question.to_owned(), ChainProgress::next_query);
            format!("<search>{query}</search>")
        }
        BROWSE => {
            let url = pending_hit(request.history).unwrap_or_else(|| {
                let entity = progress.as_ref().map_or("Main_Page", |p| p.frontier());
                format!("{URL_PREFIX}{entity}")
            });
            format!("<access>{url}</access>")
        }
        ANSWER => {
            let guess = progress.as_ref().map_or("unknown", |p| p.frontier());
            format!("<answer>{guess}</answer>")
        }
        SUMMARIZE_FACTS => summarize_page(request.page.unwrap_or_default()),
        SUMMARIZE_BRIEF => request.page.unwrap_or_default().chars().take(BRIEF_CHARS).collect(),
        _ => "Let me think about which entity the question needs next.".to_owned(),
    }
}

/// Samples from the latest published policy and stamps its version.
#[derive(Debug, Clone)]
pub struct ToyAgent {
    store: Arc<WeightStore<ToyPolicy>>,
}

impl ToyAgent {
    pub fn new(store: Arc<WeightStore<ToyPolicy>>) -> Self {
        Self { store }
    }

    pub fn store(&self) -> &Arc<WeightStore<ToyPolicy>> {
        &self.store
    }
}

impl GenerationClient for ToyAgent {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        let (version, policy) = self.store.snapshot();
        if request.purpose == Purpose::DirectAnswer {
            return Ok(Generation { text: render(ANSWER, request), model_version: version, tokens: Vec::new() });
        }
        let state = decision_state(request);
        let mut rng = rng_for(request.sample_seed, "toy", 0);
        let token = policy.sample(&state, &mut rng).map_err(|e| GenerationError::Failed(e.to_string()))?;
        Ok(Generation { text: render(token.action, request), model_version: version, tokens: vec![token] })
    }
}
