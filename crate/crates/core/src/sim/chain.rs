//! Sentence and question templates of the synthetic world, and the reader
//! that tracks how far along a hop chain the observations reach.

use std::sync::OnceLock;

use regex::Regex;

pub fn fact_sentence(relation: &str, subject: &str, object: &str) -> String {
    format!("The {relation} of {subject} is {object}.")
}

/// "What is the r_n of the ... of the r_1 of E?" for relations `[r_1, .., r_n]`.
pub fn chain_question(start: &str, relations: &[String]) -> String {
    let path = relations.iter().rev().map(String::as_str).collect::<Vec<_>>().join(" of the ");
    format!("What is the {path} of {start}?")
}

fn fact_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"The (\w+) of (\w+) is (\w+)\.").expect("valid regex"))
}

fn question_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^What is the (.+) of (\w+)\?$").expect("valid regex"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedFact {
    pub relation: String,
    pub subject: String,
    pub object: String,
}

pub fn extract_facts(text: &str) -> Vec<ObservedFact> {
    fact_regex()
        .captures_iter(text)
        .map(|c| ObservedFact { relation: c[1].to_owned(), subject: c[2].to_owned(), object: c[3].to_owned() })
        .collect()
}

/// Fact sentences of a page, or its opening if it has none.
pub fn summarize_page(page: &str) -> String {
    let sentences: Vec<&str> = fact_regex().find_iter(page).map(|m| m.as_str()).collect();
    if sentences.is_empty() {
        page.chars().take(200).collect()
    } else {
        sentences.join(" ")
    }
}

/// Start entity and relations in hop order.
pub fn parse_chain_question(question: &str) -> Option<(String, Vec<String>)> {
    let caps = question_regex().captures(question.trim())?;
    let mut relations: Vec<String> = caps[1].split(" of the ").map(str::to_owned).collect();
    if relations.iter().any(|r| r.is_empty() || r.contains(' ')) {
        return None;
    }
    relations.reverse();
    Some((caps[2].to_owned(), relations))
}

/// How much of a question's chain the observed text resolves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainProgress {
    pub start: String,
    pub relations: Vec<String>,
    /// Entities reached so far, in hop order.
    pub resolved: Vec<String>,
}

impl ChainProgress {
    pub fn from_observations<'a>(question: &str, observations: impl IntoIterator<Item = &'a str>) -> Option<Self> {
        let (start, relations) = parse_chain_question(question)?;
        let facts: Vec<ObservedFact> = observations.into_iter().flat_map(extract_facts).collect();
        let mut resolved = Vec::new();
        let mut frontier = start.clone();
        for relation in &relations {
            match facts.iter().find(|f| &f.relation == relation && f.subject == frontier) {
                Some(f) => {
                    frontier = f.object.clone();
                    resolved.push(frontier.clone());
                }
                None => break,
            }
        }
        Some(Self { start, relations, resolved })
    }

    pub fn hops(&self) -> usize {
        self.relations.len()
    }

    pub fn complete(&self) -> bool {
        self.resolved.len() == self.relations.len()
    }

    /// Latest entity reached, or the start entity.
    pub fn frontier(&self) -> &str {
        self.resolved.last().unwrap_or(&self.start)
    }

    /// Query for the next unresolved hop (the last hop again when complete).
    pub fn next_query(&self) -> String {
        let idx = self.resolved.len().min(self.relations.len().saturating_sub(1));
        let subject = if idx == 0 { &self.start } else { &self.resolved[idx - 1] };
        format!("{} of {}", self.relations[idx], subject)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn question_round_trip() {
        let rels = vec!["mentor".to_owned(), "rival".to_owned()];
        let q = chain_question("Varolin", &rels);
        assert_eq!(q, "What is the rival of the mentor of Varolin?");
        assert_eq!(parse_chain_question(&q), Some(("Varolin".to_owned(), rels)));
    }

    #[test]
    fn progress_follows_observed_facts() {
        let q = "What is the rival of the mentor of Varolin?";
        let p = ChainProgress::from_observations(q, ["The mentor of Varolin is Kesh."]).unwrap();
        assert_eq!(p.resolved, vec!["Kesh"]);
        assert_eq!(p.next_query(), "rival of Kesh");
        let p = ChainProgress::from_observations(
            q,
            ["The rival of Kesh is Tor. junk", "The mentor of Varolin is Kesh."],
        )
        .unwrap();
        assert!(p.complete());
        assert_eq!(p.frontier(), "Tor");
    }

    #[test]
    fn summary_keeps_fact_sentences() {
        let page = "Kesh. The rival of Kesh is Tor. Old town records.";
        assert_eq!(summarize_page(page), "The rival of Kesh is Tor.");
    }
}
