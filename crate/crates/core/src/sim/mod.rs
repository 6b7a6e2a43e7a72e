//! Deterministic synthetic world: corpus, tools, scripted models and
//! latency models.

pub mod chain;
mod corpus;
mod latency;
mod scripted;

pub use corpus::{
    generate_corpus, snippet, Corpus, CorpusSpec, FactTriple, HopChain, Page, NOT_FOUND_PAGE,
    SNIPPET_CHARS, URL_PREFIX,
};
pub use latency::{DurationKind, LatencyModel, LatencySampler, LogNormalParams};
pub use scripted::{scripted_generate, PolicyScript, ScriptedGenerator};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("invalid latency model: {0}")]
    InvalidLatency(String),
    #[error("io error: {0}")]
    Io(String),
}
