use serde::{Deserialize, Serialize};

use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    ModelText,
    SearchResult,
    PageSummary,
    ToolCall,
    CompactThought,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub kind: EntryKind,
    pub text: String,
    pub turn: usize,
    pub chars: usize,
}

impl HistoryEntry {
    pub fn new(kind: EntryKind, turn: usize, text: impl Into<String>) -> Self {
        let text = text.into();
        let chars = text.chars().count();
        Self { kind, text, turn, chars }
    }
}

/// Append-only agent history. Entries are never edited or removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    entries: Vec<HistoryEntry>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kind: EntryKind, turn: usize, text: impl Into<String>) -> Result<(), AgentError> {
        if let Some(last) = self.entries.last() {
            if turn < last.turn {
                return Err(AgentError::HistoryOrder { last: last.turn, turn });
            }
        }
        self.entries.push(HistoryEntry::new(kind, turn, text));
        Ok(())
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_chars(&self) -> usize {
        self.entries.iter().map(|e| e.chars).sum()
    }

    pub fn count(&self, kind: EntryKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// One JSON object per entry, newline separated.
    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("history entries serialize"))
            .map(|line| line + "\n")
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chars_count_unicode_scalars() {
        let e = HistoryEntry::new(EntryKind::ModelText, 0, "héllo");
        assert_eq!(e.chars, 5);
    }

    #[test]
    fn out_of_order_turn_is_rejected() {
        let mut h = History::new();
        h.push(EntryKind::ModelText, 2, "a").unwrap();
        assert!(h.push(EntryKind::ModelText, 1, "b").is_err());
        h.push(EntryKind::SearchResult, 2, "c").unwrap();
        assert_eq!(h.len(), 2);
    }
}
