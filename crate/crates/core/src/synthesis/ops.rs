use std::sync::OnceLock;

use regex::Regex;

use super::facts::FactSource;
use super::SynthError;
use crate::qa::{Fact, QaItem, SynthAction, SynthKind};
use crate::text::normalize_answer;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte offset of the first whole-word occurrence of `needle`.
fn find_word(haystack: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    haystack.match_indices(needle).map(|(i, _)| i).find(|&i| {
        let before = haystack[..i].chars().next_back().is_none_or(|c| !is_word_char(c));
        let after = haystack[i + needle.len()..].chars().next().is_none_or(|c| !is_word_char(c));
        before && after
    })
}

/// Replaces the first entity in the question that still has an unused fact
/// with that fact's descriptor, and records the fact.
pub fn inject(item: &QaItem, source: &dyn FactSource) -> Result<QaItem, SynthError> {
    let entities = source.entities();
    if entities.is_empty() {
        return Err(SynthError::FactSourceEmpty);
    }
    let answer = normalize_answer(&item.answer);
    let mut found: Vec<(usize, String)> = entities
        .into_iter()
        .filter(|e| normalize_answer(e) != answer)
        .filter_map(|e| find_word(&item.question, &e).map(|pos| (pos, e)))
        .collect();
    if found.is_empty() {
        return Err(SynthError::NoEntityFound);
    }
    // Earliest first; longer names win at the same position.
    found.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.len().cmp(&a.1.len())));
    for (pos, entity) in found {
        let Some(fact) = source
            .facts_about(&entity)
            .into_iter()
            .find(|f| !item.ledger.contains(&f.entity, &f.statement))
        else {
            continue;
        };
        let mut next = item.clone();
        next.question = format!("{}{}{}", &item.question[..pos], fact.descriptor, &item.question[pos + entity.len()..]);
        next.ledger
            .append(Fact { entity: fact.entity.clone(), statement: fact.statement.clone(), source: fact.source.clone() })
            .expect("fact checked unused");
        next.lineage.push(SynthAction {
            kind: SynthKind::Injection,
            round: item.last_round() + 1,
            diff: format!("{entity} -> {}", fact.descriptor),
        });
        return Ok(next);
    }
    Err(SynthError::FactSourceEmpty)
}

/// Head nouns recognised at the end of a capitalised name, with the
/// category phrase that replaces the name.
const CATEGORY_HEADS: &[(&str, &str)] = &[
    ("Railroad", "historic {} railway"),
    ("Railway", "historic {} railway"),
    ("Bridge", "historic {} bridge"),
    ("Church", "historic {} church"),
    ("Cathedral", "historic {} cathedral"),
    ("Castle", "historic {} castle"),
    ("University", "{} university"),
    ("College", "{} college"),
    ("Museum", "{} museum"),
    ("River", "{} river"),
    ("Lake", "{} lake"),
    ("Company", "{} company"),
    ("Corporation", "{} company"),
    ("Airport", "{} airport"),
    ("Hospital", "{} hospital"),
];

/// Capitalised words kept (lowercased) as modifiers in the category phrase.
const GENERIC_MODIFIERS: &[&str] = &[
    "Mountain", "Valley", "River", "Lake", "Coast", "Central", "Northern", "Southern", "Eastern", "Western",
    "National", "State", "City", "Harbor", "Island", "Forest", "Royal", "Memorial",
];

const LEADING_FUNCTION_WORDS: &[&str] = &[
    "What", "When", "Where", "Who", "Whom", "Whose", "Which", "How", "Why", "In", "On", "At", "The", "A", "An", "Is",
    "Was", "Did", "Does",
];

const PROPER_NOUN_PHRASE: &str = "a certain entity";

fn year_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(1[0-9]{3}|20[0-9]{2})\b").expect("valid regex"))
}

fn name_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b[A-Z][\w'\-]*\.?(?:\s+[A-Z][\w'\-]*\.?)*").expect("valid regex")
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct FuzzSpan {
    start: usize,
    end: usize,
    priority: u8,
    replacement: String,
}

fn decade_phrase(year: u32) -> String {
    let part = match year % 10 {
        0..=4 => "early",
        5..=6 => "mid",
        _ => "late",
    };
    format!("the {part} {}s", year / 10 * 10)
}

/// Extends a span back over a directly preceding "the ".
fn absorb_article(question: &str, start: usize) -> usize {
    let before = &question[..start];
    for article in ["the ", "The "] {
        if before.ends_with(article) {
            let s = start - article.len();
            if question[..s].chars().next_back().is_none_or(|c| !is_word_char(c)) {
                return s;
            }
        }
    }
    start
}

fn candidate_spans(question: &str) -> Vec<FuzzSpan> {
    let mut spans = Vec::new();
    for m in year_regex().find_iter(question) {
        let year: u32 = m.as_str().parse().expect("digits");
        spans.push(FuzzSpan { start: m.start(), end: m.end(), priority: 0, replacement: decade_phrase(year) });
    }
    for m in name_regex().find_iter(question) {
        // Trim sentence-initial function words ("What", "The", ...).
        let mut start = m.start();
        let mut words: Vec<&str> = m.as_str().split_whitespace().collect();
        while let Some(first) = words.first() {
            if !LEADING_FUNCTION_WORDS.contains(first) {
                break;
            }
            let rest = &question[start + first.len()..m.end()];
            start += first.len() + (rest.len() - rest.trim_start().len());
            words.remove(0);
        }
        if words.is_empty() {
            continue;
        }
        let end = m.end();
        let last = words.last().expect("non-empty").trim_end_matches('.');
        let span_start = absorb_article(question, start);
        if let Some((_, template)) = CATEGORY_HEADS.iter().find(|(head, _)| *head == last) {
            let modifiers: Vec<String> = words[..words.len() - 1]
                .iter()
                .filter(|w| GENERIC_MODIFIERS.contains(w))
                .map(|w| w.to_lowercase())
                .collect();
            let phrase = template.replace("{}", &modifiers.join(" "));
            let phrase = phrase.split_whitespace().collect::<Vec<_>>().join(" ");
            let article = if phrase.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
            spans.push(FuzzSpan { start: span_start, end, priority: 1, replacement: format!("{article} {phrase}") });
        } else {
            spans.push(FuzzSpan { start: span_start, end, priority: 2, replacement: PROPER_NOUN_PHRASE.to_owned() });
        }
    }
    spans
}

/// Blurs the first concrete detail of the question: a year becomes a part
/// of its decade, a named place or institution its category, any other name
/// a generic phrase.
pub fn fuzz(item: &QaItem) -> Result<QaItem, SynthError> {
    let span = candidate_spans(&item.question)
        .into_iter()
        .min_by_key(|s| (s.start, s.priority))
        .ok_or(SynthError::NothingToFuzz)?;
    let original = &item.question[span.start..span.end];
    let mut next = item.clone();
    next.question = format!("{}{}{}", &item.question[..span.start], span.replacement, &item.question[span.end..]);
    next.lineage.push(SynthAction {
        kind: SynthKind::Fuzz,
        round: item.last_round() + 1,
        diff: format!("{original} -> {}", span.replacement),
    });
    Ok(next)
}
