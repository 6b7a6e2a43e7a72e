use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::sim::Corpus;

/// A fact about an entity plus a description that can stand in for the
/// entity's name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFact {
    pub entity: String,
    pub statement: String,
    /// Noun phrase with its article, e.g. "the first mayor of X".
    pub descriptor: String,
    pub source: String,
}

/// Where injected facts come from. Implementations must accept concurrent calls.
pub trait FactSource: Send + Sync {
    /// Every entity the source can describe.
    fn entities(&self) -> Vec<String>;
    fn facts_about(&self, entity: &str) -> Vec<SourceFact>;
}

/// Fixed list of facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptedFactSource {
    facts: Vec<SourceFact>,
}

impl ScriptedFactSource {
    pub fn new(facts: Vec<SourceFact>) -> Self {
        Self { facts }
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

impl FactSource for ScriptedFactSource {
    fn entities(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.facts {
            if !out.contains(&f.entity) {
                out.push(f.entity.clone());
            }
        }
        out
    }

    fn facts_about(&self, entity: &str) -> Vec<SourceFact> {
        self.facts.iter().filter(|f| f.entity == entity).cloned().collect()
    }
}

/// Facts read from corpus pages; an entity is described by one of its
/// relations: "the one whose mentor is Kesh".
#[derive(Debug, Clone)]
pub struct CorpusFactSource {
    corpus: Arc<Corpus>,
}

impl CorpusFactSource {
    pub fn new(corpus: Arc<Corpus>) -> Self {
        Self { corpus }
    }
}

pub(crate) fn corpus_descriptor(relation: &str, object: &str) -> String {
    format!("the one whose {relation} is {object}")
}

impl FactSource for CorpusFactSource {
    fn entities(&self) -> Vec<String> {
        self.corpus.pages().map(|p| p.title.clone()).collect()
    }

    fn facts_about(&self, entity: &str) -> Vec<SourceFact> {
        self.corpus
            .pages()
            .flat_map(|p| p.facts.iter().map(move |f| (p, f)))
            .filter(|(_, f)| f.subject == entity)
            .map(|(p, f)| SourceFact {
                entity: entity.to_owned(),
                statement: f.sentence(),
                descriptor: corpus_descriptor(&f.relation, &f.object),
                source: p.url.clone(),
            })
            .collect()
    }
}
