//! Prompt construction under the two history policies.
//!
//! Base models see the whole append-only history. Reasoning models see a
//! compacted history (thinking replaced by a short thought summary, tool calls
//! kept) cut down to the most recent `history_window_chars` characters at entry
//! boundaries, then further cut so the full prompt fits `prompt_char_cap`.

use serde::{Deserialize, Serialize};

use super::action::parse_action;
use super::history::{EntryKind, History, HistoryEntry};
use super::AgentError;

pub const SYSTEM_PREAMBLE: &str = "You are a search agent. Think step by step. \
Use <search>query</search> to search, <access>url</access> to read a page, \
and <answer>text</answer> to give the final answer.";

/// Appended to the prompt on the last allowed turn.
pub const ANSWER_ONLY_INSTRUCTION: &str =
    "The turn budget is exhausted. Reply only with <answer>your best answer</answer>.";

pub const SUMMARY_INSTRUCTION: &str =
    "Summarize the page below into the facts relevant to the question.";

/// Length of the thought prefix kept when compacting model text.
pub const COMPACT_THOUGHT_CHARS: usize = 200;

const ENTRY_SEPARATOR: &str = "\n";
const SECTION_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Append-only history.
    #[default]
    BaseLm,
    /// Compacted history within a character window.
    ReasoningLm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub turn_limit: usize,
    pub min_turns: usize,
    pub history_window_chars: usize,
    pub prompt_char_cap: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self::base()
    }
}

impl BudgetConfig {
    pub fn base() -> Self {
        Self { turn_limit: 32, min_turns: 0, history_window_chars: 25_000, prompt_char_cap: 10_000 }
    }

    pub fn reasoning() -> Self {
        Self { turn_limit: 128, ..Self::base() }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.turn_limit == 0 {
            return Err(AgentError::InvalidBudget("turn_limit must be positive".into()));
        }
        if self.min_turns >= self.turn_limit {
            return Err(AgentError::InvalidBudget(format!(
                "min_turns ({}) must be below turn_limit ({})",
                self.min_turns, self.turn_limit
            )));
        }
        if self.history_window_chars == 0 || self.prompt_char_cap == 0 {
            return Err(AgentError::InvalidBudget("character budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Replace model text with a short thought summary; every other entry is kept.
pub fn compact_entries(entries: &[HistoryEntry]) -> Vec<HistoryEntry> {
    entries
        .iter()
        .map(|entry| match entry.kind {
            EntryKind::ModelText => {
                let thought = match parse_action(&entry.text) {
                    Ok(action) if action.thought.is_empty() && action.kind == super::ActionKind::Think => {
                        action.payload
                    }
                    Ok(action) => action.thought,
                    Err(_) => entry.text.clone(),
                };
                let summary: String = thought.trim().chars().take(COMPACT_THOUGHT_CHARS).collect();
                HistoryEntry::new(EntryKind::CompactThought, entry.turn, summary)
            }
            _ => entry.clone(),
        })
        .collect()
}

/// Character length of entries rendered with separators.
pub fn rendered_chars(entries: &[HistoryEntry]) -> usize {
    if entries.is_empty() {
        return 0;
    }
    entries.iter().map(|e| e.chars).sum::<usize>() + entries.len() - 1
}

/// Longest suffix of `entries` whose rendering fits in `limit` characters.
pub fn window_suffix(entries: &[HistoryEntry], limit: usize) -> &[HistoryEntry] {
    let mut used = 0usize;
    let mut start = entries.len();
    for (i, entry) in entries.iter().enumerate().rev() {
        let extra = entry.chars + usize::from(start < entries.len());
        if used + extra > limit {
            break;
        }
        used += extra;
        start = i;
    }
    &entries[start..]
}

pub fn render_entries(entries: &[HistoryEntry]) -> String {
    entries.iter().map(|e| e.text.as_str()).collect::<Vec<_>>().join(ENTRY_SEPARATOR)
}

/// The history entries that make it into the prompt, in order.
pub fn prompt_entries(mode: AgentMode, history: &History, budget: &BudgetConfig) -> Vec<HistoryEntry> {
    match mode {
        AgentMode::BaseLm => history.entries().to_vec(),
        AgentMode::ReasoningLm => {
            let compacted = compact_entries(history.entries());
            let windowed = window_suffix(&compacted, budget.history_window_chars);
            let preamble_chars = SYSTEM_PREAMBLE.chars().count() + SECTION_SEPARATOR.len();
            let room = budget.prompt_char_cap.saturating_sub(preamble_chars);
            window_suffix(windowed, room).to_vec()
        }
    }
}

pub fn build_prompt(mode: AgentMode, history: &History, budget: &BudgetConfig) -> String {
    let entries = prompt_entries(mode, history, budget);
    if entries.is_empty() {
        return SYSTEM_PREAMBLE.to_owned();
    }
    format!("{SYSTEM_PREAMBLE}{SECTION_SEPARATOR}{}", render_entries(&entries))
}

/// The history portion of a prompt built by [`build_prompt`].
pub fn history_portion(prompt: &str) -> &str {
    prompt
        .strip_prefix(SYSTEM_PREAMBLE)
        .map(|rest| rest.strip_prefix(SECTION_SEPARATOR).unwrap_or(rest))
        .unwrap_or(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history_of(texts: &[(EntryKind, &str)]) -> History {
        let mut h = History::new();
        for (turn, (kind, text)) in texts.iter().enumerate() {
            h.push(*kind, turn, *text).unwrap();
        }
        h
    }

    #[test]
    fn empty_history_is_preamble_only() {
        let p = build_prompt(AgentMode::ReasoningLm, &History::new(), &BudgetConfig::base());
        assert_eq!(p, SYSTEM_PREAMBLE);
    }

    #[test]
    fn base_mode_keeps_everything_in_order() {
        let h = history_of(&[
            (EntryKind::ModelText, "first <search>a</search>"),
            (EntryKind::SearchResult, "second"),
            (EntryKind::ModelText, "third"),
        ]);
        let p = build_prompt(AgentMode::BaseLm, &h, &BudgetConfig::base());
        let a = p.find("first").unwrap();
        let b = p.find("second").unwrap();
        let c = p.find("third").unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn reasoning_window_keeps_a_suffix_within_budget() {
        let mut h = History::new();
        for turn in 0..30 {
            h.push(EntryKind::SearchResult, turn, "x".repeat(999)).unwrap();
        }
        assert_eq!(rendered_chars(h.entries()), 30 * 999 + 29);
        let budget = BudgetConfig { prompt_char_cap: 1_000_000, ..BudgetConfig::base() };
        let p = build_prompt(AgentMode::ReasoningLm, &h, &budget);
        let portion = history_portion(&p);
        assert!(portion.chars().count() <= 25_000);
        let kept = prompt_entries(AgentMode::ReasoningLm, &h, &budget);
        assert_eq!(kept.len(), 25);
        assert_eq!(kept.last().unwrap().turn, 29);
    }

    #[test]
    fn prompt_cap_applies_to_whole_prompt() {
        let mut h = History::new();
        for turn in 0..20 {
            h.push(EntryKind::SearchResult, turn, "y".repeat(1_000)).unwrap();
        }
        let p = build_prompt(AgentMode::ReasoningLm, &h, &BudgetConfig::base());
        assert!(p.chars().count() <= 10_000);
    }

    #[test]
    fn compaction_keeps_thought_prefix_and_tool_calls() {
        let long = format!("{} <search>q</search>", "t".repeat(500));
        let h = history_of(&[(EntryKind::ModelText, &long), (EntryKind::ToolCall, "<search>q</search>")]);
        let c = compact_entries(h.entries());
        assert_eq!(c[0].kind, EntryKind::CompactThought);
        assert_eq!(c[0].chars, COMPACT_THOUGHT_CHARS);
        assert_eq!(c[1], h.entries()[1]);
    }

    #[test]
    fn oversized_entry_is_dropped_whole() {
        let h = history_of(&[(EntryKind::SearchResult, "short"), (EntryKind::SearchResult, &"z".repeat(50))]);
        let budget = BudgetConfig { history_window_chars: 10, ..BudgetConfig::base() };
        assert!(prompt_entries(AgentMode::ReasoningLm, &h, &budget).is_empty());
    }

    #[test]
    fn budget_validation() {
        assert!(BudgetConfig { min_turns: 32, ..BudgetConfig::base() }.validate().is_err());
        assert!(BudgetConfig::reasoning().validate().is_ok());
    }
}
