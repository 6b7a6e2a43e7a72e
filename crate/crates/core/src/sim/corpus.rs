//! The synthetic page corpus, its search and browse endpoints, and the
//! corpus generator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chain::{chain_question, fact_sentence};
use super::SimError;
use crate::agent::{SearchHit, SearchResults, ToolClient, ToolError};
use crate::qa::QaItem;
use crate::rng::rng_for;
use crate::text::{search_tokens, token_spans};

pub const SNIPPET_CHARS: usize = 300;
pub const NOT_FOUND_PAGE: &str = "404";
pub const URL_PREFIX: &str = "https://wiki.local/";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactTriple {
    pub id: String,
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl FactTriple {
    pub fn sentence(&self) -> String {
        fact_sentence(&self.relation, &self.subject, &self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub url: String,
    pub title: String,
    pub body: String,
    #[serde(default)]
    pub facts: Vec<FactTriple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopChain {
    pub qa_id: String,
    #[serde(default)]
    pub question: String,
    #[serde(default)]
    pub answer: String,
    /// Fact ids in hop order.
    pub facts: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct CorpusFile {
    pages: Vec<Page>,
    chains: Vec<HopChain>,
}

/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Corpus {
    pages: BTreeMap<String, Page>,
    chains: Vec<HopChain>,
    /// Search tokens of each page body, keyed by url.
    index: BTreeMap<String, HashMap<String, usize>>,
}

impl Corpus {
    pub fn new(pages: Vec<Page>, chains: Vec<HopChain>) -> Result<Self, SimError> {
        let mut map = BTreeMap::new();
        for page in pages {
            if map.contains_key(&page.url) {
                return Err(SimError::InvalidCorpus(format!("duplicate url {}", page.url)));
            }
            map.insert(page.url.clone(), page);
        }
        let index = map
            .iter()
            .map(|(url, page)| {
                let mut counts = HashMap::new();
                for tok in search_tokens(&page.body) {
                    *counts.entry(tok).or_insert(0) += 1;
                }
                (url.clone(), counts)
            })
            .collect();
        let corpus = Self { pages: map, chains, index };
        corpus.validate()?;
        Ok(corpus)
    }

    /// Every chain fact must appear in exactly one page.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut owners: HashMap<&str, usize> = HashMap::new();
        for page in self.pages.values() {
            for fact in &page.facts {
                *owners.entry(fact.id.as_str()).or_insert(0) += 1;
            }
        }
        for chain in &self.chains {
            if chain.facts.is_empty() {
                return Err(SimError::InvalidCorpus(format!("chain {} has no facts", chain.qa_id)));
            }
            for id in &chain.facts {
                match owners.get(id.as_str()) {
                    Some(1) => {}
                    Some(n) => {
                        return Err(SimError::InvalidCorpus(format!("fact {id} appears in {n} pages")))
                    }
                    None => return Err(SimError::InvalidCorpus(format!("fact {id} is on no page"))),
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let file: CorpusFile = serde_json::from_str(text).map_err(|e| SimError::InvalidCorpus(e.to_string()))?;
        Self::new(file.pages, file.chains)
    }

    pub fn to_json(&self) -> String {
        let file = CorpusFile { pages: self.pages.values().cloned().collect(), chains: self.chains.clone() };
        serde_json::to_string_pretty(&file).expect("corpus serializes")
    }

    pub fn pages(&self) -> impl Iterator<Item = &Page> {
        self.pages.values()
    }

    pub fn page(&self, url: &str) -> Option<&Page> {
        self.pages.get(url)
    }

    pub fn chains(&self) -> &[HopChain] {
        &self.chains
    }

    pub fn chain_for_question(&self, question: &str) -> Option<&HopChain> {
        self.chains.iter().find(|c| c.question == question)
    }

    pub fn fact(&self, id: &str) -> Option<&FactTriple> {
        self.pages.values().flat_map(|p| p.facts.iter()).find(|f| f.id == id)
    }

    /// The chain's facts in hop order.
    pub fn chain_facts(&self, chain: &HopChain) -> Vec<&FactTriple> {
        chain.facts.iter().filter_map(|id| self.fact(id)).collect()
    }

    /// Chains as workload items.
    pub fn qa_items(&self) -> Vec<QaItem> {
        self.chains.iter().map(|c| QaItem::new(c.qa_id.clone(), c.question.clone(), c.answer.clone())).collect()
    }

    /// Term-overlap score: occurrences in the body of each distinct query token.
    pub fn score(&self, url: &str, query_tokens: &BTreeSet<String>) -> usize {
        self.index
            .get(url)
            .map_or(0, |counts| query_tokens.iter().map(|t| counts.get(t).copied().unwrap_or(0)).sum())
    }

    pub fn search(&self, query: &str, k: usize) -> SearchResults {
        let tokens: BTreeSet<String> = search_tokens(query).into_iter().collect();
        if tokens.is_empty() || k == 0 {
            return SearchResults::default();
        }
        let mut scored: Vec<(usize, &Page)> = self
            .pages
            .values()
            .map(|p| (self.score(&p.url, &tokens), p))
            .filter(|(s, _)| *s > 0)
            .collect();
        scored.sort_by(|(sa, pa), (sb, pb)| sb.cmp(sa).then_with(|| pa.url.cmp(&pb.url)));
        let hits = scored
            .into_iter()
            .take(k)
            .map(|(score, page)| SearchHit {
                snippet: snippet(&page.body, &tokens),
                url: page.url.clone(),
                score: score as f64,
            })
            .collect();
        SearchResults { hits }
    }

    pub fn browse(&self, url: &str) -> String {
        self.pages.get(url).map_or_else(|| NOT_FOUND_PAGE.to_owned(), |p| p.body.clone())
    }
}

/// A window of up to [`SNIPPET_CHARS`] characters centred on the first token
/// of `body` that matches the query.
pub fn snippet(body: &str, query_tokens: &BTreeSet<String>) -> String {
    let chars: Vec<(usize, char)> = body.char_indices().collect();
    let total = chars.len();
    let first_byte = token_spans(body)
        .into_iter()
        .find(|(_, _, tok)| query_tokens.contains(tok))
        .map_or(0, |(start, _, _)| start);
    let match_char = chars.partition_point(|(b, _)| *b < first_byte);
    let start = match_char.saturating_sub(SNIPPET_CHARS / 2).min(total.saturating_sub(SNIPPET_CHARS));
    chars[start..(start + SNIPPET_CHARS).min(total)].iter().map(|(_, c)| c).collect()
}

impl ToolClient for Corpus {
    fn search(&self, query: &str, k: usize) -> Result<SearchResults, ToolError> {
        Ok(Corpus::search(self, query, k))
    }

    fn browse(&self, url: &str) -> Result<String, ToolError> {
        Ok(Corpus::browse(self, url))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub questions: usize,
    pub hops: usize,
    /// Facts per page that are not on any chain.
    pub distractor_facts: usize,
    pub filler_sentences: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { questions: 20, hops: 2, distractor_facts: 2, filler_sentences: 6, seed: 0 }
    }
}

const RELATIONS: [&str; 12] = [
    "mentor", "founder", "rival", "patron", "successor", "sponsor", "architect", "biographer",
    "heir", "tutor", "ally", "steward",
];

const SYLLABLES: [&str; 24] = [
    "ka", "ro", "vel", "min", "tor", "sa", "lu", "den", "bri", "quo", "zan", "fer", "ol", "mar",
    "thi", "gre", "pal", "nov", "esk", "ur", "yss", "dra", "mo", "kel",
];

const FILLER: [&str; 12] = [
    "Records describe a long history of local trade.",
    "Several archives keep letters from that period.",
    "Visitors often remark on the quiet surroundings.",
    "Later accounts disagree about minor details.",
    "Much of the early material was lost in a flood.",
    "Scholars continue to debate its wider influence.",
    "A small museum displays related artifacts.",
    "Travelers mentioned it in several diaries.",
    "Annual gatherings still mark the anniversary.",
    "Old maps show a different spelling.",
    "Its name appears in regional folk songs.",
    "Photographs from the era are rare.",
];

fn entity_name(rng: &mut impl Rng, taken: &mut BTreeSet<String>) -> String {
    loop {
        let parts = rng.random_range(2..=3);
        let raw: String = (0..parts).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        let mut chars = raw.chars();
        let name: String = chars.next().into_iter().flat_map(char::to_uppercase).chain(chars).collect();
        let lower = name.to_lowercase();
        let clashes = RELATIONS.contains(&lower.as_str())
            || FILLER.iter().any(|s| search_tokens(s).contains(&lower))
            || search_tokens(&name).is_empty();
        if !clashes && taken.insert(name.clone()) {
            return name;
        }
    }
}

/// Generate a corpus of `questions` disjoint hop chains.
///
/// Each chain entity gets its own page whose opening lists its facts; every
/// entity is the object of at most one fact, so a query equal to a title
/// always ranks that page first.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus, SimError> {
    if spec.hops == 0 {
        return Err(SimError::InvalidCorpus("hops must be at least 1".into()));
    }
    if spec.hops + spec.distractor_facts > RELATIONS.len() || spec.distractor_facts + 1 < 2 {
        return Err(SimError::InvalidCorpus("relation vocabulary too small for this spec".into()));
    }
    let mut rng = rng_for(spec.seed, "corpus", 0);
    let mut taken = BTreeSet::new();
    let mut pages = Vec::new();
    let mut chains = Vec::new();
    let mut fact_counter = 0usize;
    let mut next_fact = |subject: &str, relation: &str, object: &str| {
        fact_counter += 1;
        FactTriple {
            id: format!("f{fact_counter}"),
            subject: subject.to_owned(),
            relation: relation.to_owned(),
            object: object.to_owned(),
        }
    };

    for q in 0..spec.questions {
        let entities: Vec<String> = (0..=spec.hops).map(|_| entity_name(&mut rng, &mut taken)).collect();
        let mut rels: Vec<&str> = RELATIONS.to_vec();
        rels.shuffle(&mut rng);
        let relations: Vec<String> = rels[..spec.hops].iter().map(|r| (*r).to_owned()).collect();
        let mut chain_ids = Vec::new();

        for (k, entity) in entities.iter().enumerate() {
            let mut facts = Vec::new();
            let mut used = BTreeSet::new();
            if k < spec.hops {
                let fact = next_fact(entity, &relations[k], &entities[k + 1]);
                chain_ids.push(fact.id.clone());
                used.insert(relations[k].clone());
                facts.push(fact);
            }
            // The answer page gets one extra distractor so every page carries
            // at least two facts about its title entity.
            let distractors = spec.distractor_facts + usize::from(k == spec.hops && spec.distractor_facts < 2);
            let mut pool: Vec<&str> = RELATIONS.iter().copied().filter(|r| !used.contains(*r)).collect();
            pool.shuffle(&mut rng);
            for relation in pool.into_iter().take(distractors) {
                let object = entity_name(&mut rng, &mut taken);
                facts.push(next_fact(entity, relation, &object));
            }
            facts.shuffle(&mut rng);
            let mut body = format!("{entity}.");
            for fact in &facts {
                body.push(' ');
                body.push_str(&fact.sentence());
            }
            let mut filler: Vec<&str> = FILLER.to_vec();
            filler.shuffle(&mut rng);
            for sentence in filler.into_iter().take(spec.filler_sentences) {
                body.push(' ');
                body.push_str(sentence);
            }
            pages.push(Page { url: format!("{URL_PREFIX}{entity}"), title: entity.clone(), body, facts });
        }
        chains.push(HopChain {
            qa_id: format!("q{q}"),
            question: chain_question(&entities[0], &relations),
            answer: entities[spec.hops].clone(),
            facts: chain_ids,
        });
    }
    Corpus::new(pages, chains)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Corpus {
        generate_corpus(&CorpusSpec { questions: 5, ..CorpusSpec::default() }).unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = CorpusSpec { questions: 4, seed: 9, ..CorpusSpec::default() };
        assert_eq!(generate_corpus(&spec).unwrap().to_json(), generate_corpus(&spec).unwrap().to_json());
    }

    #[test]
    fn absent_term_gives_no_hits() {
        assert!(small().search("zzz-absent-term", 5).hits.is_empty());
    }

    #[test]
    fn browse_known_and_unknown() {
        let c = small();
        let page = c.pages().next().unwrap().clone();
        assert_eq!(c.browse(&page.url), page.body);
        assert_eq!(c.browse("https://nowhere.example/x"), "404");
    }

    #[test]
    fn equal_scores_break_ties_by_url() {
        let pages = vec![
            Page { url: "https://b".into(), title: "B".into(), body: "apple pie".into(), facts: vec![] },
            Page { url: "https://a".into(), title: "A".into(), body: "apple tart".into(), facts: vec![] },
        ];
        let c = Corpus::new(pages, vec![]).unwrap();
        let hits = c.search("apple", 5).hits;
        assert_eq!(hits.iter().map(|h| h.url.as_str()).collect::<Vec<_>>(), vec!["https://a", "https://b"]);
    }

    #[test]
    fn json_round_trip_preserves_search() {
        let c = small();
        let back = Corpus::from_json(&c.to_json()).unwrap();
        let q = &c.chains()[0].question;
        assert_eq!(c.search(q, 5), back.search(q, 5));
    }

    #[test]
    fn chain_fact_on_two_pages_is_rejected() {
        let fact = FactTriple { id: "f1".into(), subject: "A".into(), relation: "r".into(), object: "B".into() };
        let page = |url: &str| Page { url: url.into(), title: "t".into(), body: "b".into(), facts: vec![fact.clone()] };
        let chain = HopChain { qa_id: "q".into(), question: String::new(), answer: String::new(), facts: vec!["f1".into()] };
        assert!(Corpus::new(vec![page("u1"), page("u2")], vec![chain]).is_err());
    }

    #[test]
    fn snippet_is_bounded_and_centred() {
        let body = format!("{} needle {}", "a ".repeat(300), "b ".repeat(300));
        let tokens: BTreeSet<String> = ["needle".to_owned()].into();
        let s = snippet(&body, &tokens);
        assert_eq!(s.chars().count(), SNIPPET_CHARS);
        assert!(s.contains("needle"));
    }
}
