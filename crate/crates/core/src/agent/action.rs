use serde::{Deserialize, Serialize};

use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Think,
    Search,
    Browse,
    Summarize,
    Answer,
}

/// A parsed model output. `thought` holds any free text that preceded the tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentAction {
    pub kind: ActionKind,
    pub payload: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub thought: String,
}

impl AgentAction {
    pub fn think(text: impl Into<String>) -> Self {
        Self { kind: ActionKind::Think, payload: text.into(), thought: String::new() }
    }

    pub fn answer(text: impl Into<String>) -> Self {
        Self { kind: ActionKind::Answer, payload: text.into(), thought: String::new() }
    }

    pub fn is_tool_call(&self) -> bool {
        matches!(self.kind, ActionKind::Search | ActionKind::Browse)
    }
}

/// Opening tag, closing tag, and the action each maps to.
pub(crate) const TAGS: [(&str, &str, ActionKind); 3] = [
    ("<search>", "</search>", ActionKind::Search),
    ("<access>", "</access>", ActionKind::Browse),
    ("<answer>", "</answer>", ActionKind::Answer),
];

/// Parse the first tagged action in `output`.
///
/// Text before the tag becomes the action's thought. Output with no opening
/// tag is a `Think` carrying the whole text.
pub fn parse_action(output: &str) -> Result<AgentAction, AgentError> {
    let first = TAGS
        .iter()
        .filter_map(|(open, close, kind)| output.find(open).map(|pos| (pos, *open, *close, *kind)))
        .min_by_key(|(pos, ..)| *pos);

    let Some((pos, open, close, kind)) = first else {
        return Ok(AgentAction::think(output));
    };

    let body_start = pos + open.len();
    let Some(rel_end) = output[body_start..].find(close) else {
        return Err(AgentError::MalformedTag { tag: open.to_owned(), reason: "never closed" });
    };
    let payload = output[body_start..body_start + rel_end].trim();
    if payload.is_empty() {
        return Err(AgentError::MalformedTag { tag: open.to_owned(), reason: "empty payload" });
    }
    if kind == ActionKind::Browse && !looks_like_url(payload) {
        return Err(AgentError::MalformedTag { tag: open.to_owned(), reason: "payload is not a url" });
    }
    Ok(AgentAction { kind, payload: payload.to_owned(), thought: output[..pos].trim().to_owned() })
}

fn looks_like_url(s: &str) -> bool {
    (s.starts_with("http://") || s.starts_with("https://"))
        && s.len() > "https://".len()
        && !s.chars().any(char::is_whitespace)
}

/// Remove tag markers (not their contents) and collapse whitespace.
pub fn strip_tags(output: &str) -> String {
    let mut text = output.to_owned();
    for (open, close, _) in TAGS {
        text = text.replace(open, " ").replace(close, " ");
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_tag_is_parsed_and_trimmed() {
        let a = parse_action("<search> london 2012 medals </search>").unwrap();
        assert_eq!(a.kind, ActionKind::Search);
        assert_eq!(a.payload, "london 2012 medals");
    }

    #[test]
    fn untagged_text_is_think() {
        let a = parse_action("no tags here").unwrap();
        assert_eq!(a, AgentAction::think("no tags here"));
    }

    #[test]
    fn answer_tag() {
        let a = parse_action("<answer>Mice</answer>").unwrap();
        assert_eq!(a, AgentAction::answer("Mice"));
    }

    #[test]
    fn first_tag_wins_and_thought_is_kept() {
        let a = parse_action("hmm, check first <access>https://x.org/a</access> then <answer>b</answer>")
            .unwrap();
        assert_eq!(a.kind, ActionKind::Browse);
        assert_eq!(a.payload, "https://x.org/a");
        assert_eq!(a.thought, "hmm, check first");
    }

    #[test]
    fn unclosed_tag_is_malformed() {
        assert!(matches!(
            parse_action("<search> never closes"),
            Err(AgentError::MalformedTag { reason: "never closed", .. })
        ));
    }

    #[test]
    fn empty_payload_and_bad_url_are_malformed() {
        assert!(parse_action("<answer>  </answer>").is_err());
        assert!(parse_action("<access>not a url</access>").is_err());
    }

    #[test]
    fn strip_tags_keeps_contents() {
        assert_eq!(strip_tags("I think <search> q  r </search>"), "I think q r");
    }
}
