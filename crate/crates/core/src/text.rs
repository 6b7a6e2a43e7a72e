//! Text normalization shared by answer scoring and retrieval.

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Stopwords ignored by the retrieval scorer.
const SEARCH_STOPWORDS: [&str; 24] = [
    "a", "an", "the", "of", "is", "was", "what", "who", "which", "when", "where", "how", "in",
    "on", "at", "and", "or", "to", "for", "by", "with", "does", "did", "are",
];

/// Answer tokens: lowercase, punctuation removed, articles dropped,
/// whitespace split.
pub fn answer_tokens(text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    cleaned
        .split_whitespace()
        .filter(|w| !ARTICLES.contains(w))
        .map(str::to_owned)
        .collect()
}

/// Canonical answer string used by exact-match judging.
pub fn normalize_answer(text: &str) -> String {
    answer_tokens(text).join(" ")
}

/// Retrieval tokens: lowercase alphanumeric runs without stopwords.
pub fn search_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && !SEARCH_STOPWORDS.contains(w))
        .map(str::to_owned)
        .collect()
}

/// Byte spans of alphanumeric runs in `text`, paired with their lowercase form.
pub(crate) fn token_spans(text: &str) -> Vec<(usize, usize, String)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            spans.push((s, i, text[s..i].to_lowercase()));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len(), text[s..].to_lowercase()));
    }
    spans
}
