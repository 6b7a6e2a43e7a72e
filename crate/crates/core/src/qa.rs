//! Question-answer items and their synthesis provenance.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub entity: String,
    pub statement: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("fact already in ledger: {entity}: {statement}")]
pub struct DuplicateFact {
    pub entity: String,
    pub statement: String,
}

/// Append-only list of supporting facts; (entity, statement) pairs are unique.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactLedger {
    facts: Vec<Fact>,
}

impl FactLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, entity: &str, statement: &str) -> bool {
        self.facts.iter().any(|f| f.entity == entity && f.statement == statement)
    }

    pub fn append(&mut self, fact: Fact) -> Result<(), DuplicateFact> {
        if self.contains(&fact.entity, &fact.statement) {
            return Err(DuplicateFact { entity: fact.entity, statement: fact.statement });
        }
        self.facts.push(fact);
        Ok(())
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Injection,
    Fuzz,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthAction {
    pub kind: SynthKind,
    pub round: usize,
    pub diff: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub ledger: FactLedger,
    #[serde(default)]
    pub lineage: Vec<SynthAction>,
}

impl QaItem {
    pub fn new(id: impl Into<String>, question: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            answer: answer.into(),
            ledger: FactLedger::new(),
            lineage: Vec::new(),
        }
    }

    pub fn count(&self, kind: SynthKind) -> usize {
        self.lineage.iter().filter(|a| a.kind == kind).count()
    }

    pub fn last_round(&self) -> usize {
        self.lineage.last().map_or(0, |a| a.round)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_rejects_duplicates() {
        let mut l = FactLedger::new();
        let f = Fact { entity: "A".into(), statement: "A is B".into(), source: "s".into() };
        l.append(f.clone()).unwrap();
        assert!(l.append(f).is_err());
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn seed_jsonl_without_ledger_parses() {
        let q: QaItem = serde_json::from_str(r#"{"id":"1","question":"q?","answer":"a"}"#).unwrap();
        assert!(q.ledger.is_empty() && q.lineage.is_empty());
    }
}
