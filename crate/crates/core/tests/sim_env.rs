use std::collections::BTreeSet;
use std::sync::Arc;

use searchrl::agent::{run_trajectory, AgentMode, BudgetConfig, GenerationRequest, History, Purpose};
use searchrl::reward::{compute_reward, ExactMatchJudge};
use searchrl::sim::{
    generate_corpus, scripted_generate, Corpus, CorpusSpec, DurationKind, FactTriple, HopChain, LatencyModel,
    LatencySampler, LogNormalParams, Page, PolicyScript, ScriptedGenerator, NOT_FOUND_PAGE,
};
use searchrl::text::search_tokens;

fn corpus(seed: u64, hops: usize) -> Corpus {
    generate_corpus(&CorpusSpec { seed, hops, ..CorpusSpec::default() }).unwrap()
}

fn request<'a>(prompt: &'a str, question: &'a str, history: &'a History, budget: &'a BudgetConfig, seed: u64) -> GenerationRequest<'a> {
    GenerationRequest { purpose: Purpose::Act, prompt, question, history, turn: 0, budget, page: None, sample_seed: seed }
}

#[test]
fn title_query_ranks_its_page_first() {
    let c = corpus(2, 2);
    for page in c.pages() {
        let hits = c.search(&page.title, 5).hits;
        assert_eq!(hits[0].url, page.url, "query {}", page.title);
        // Brute force: no page outscores the top hit.
        let tokens: BTreeSet<String> = search_tokens(&page.title).into_iter().collect();
        let best = c.pages().map(|p| c.score(&p.url, &tokens)).max().unwrap();
        assert_eq!(hits[0].score as usize, best);
    }
}

#[test]
fn absent_terms_give_no_hits() {
    assert!(corpus(2, 2).search("zzz-absent-term", 5).hits.is_empty());
}

#[test]
fn ties_break_by_url() {
    let page = |url: &str| Page { url: url.into(), title: url.into(), body: "shared word".into(), facts: Vec::new() };
    let c = Corpus::new(vec![page("https://b"), page("https://a"), page("https://c")], Vec::new()).unwrap();
    let urls: Vec<String> = c.search("shared", 2).hits.into_iter().map(|h| h.url).collect();
    assert_eq!(urls, vec!["https://a", "https://b"]);
}

#[test]
fn hits_are_ranked_and_bounded() {
    let c = corpus(3, 3);
    for query in ["mentor", "rival of", "records history trade", "ally steward heir"] {
        let hits = c.search(query, 5).hits;
        assert!(hits.len() <= 5);
        for pair in hits.windows(2) {
            assert!(pair[0].score > pair[1].score || (pair[0].score == pair[1].score && pair[0].url < pair[1].url));
        }
        for hit in &hits {
            assert!(hit.snippet.chars().count() <= 300);
            assert!(c.browse(&hit.url).contains(&hit.snippet));
        }
    }
}

#[test]
fn browse_known_and_unknown() {
    let c = corpus(1, 2);
    let page = c.pages().next().unwrap();
    assert_eq!(c.browse(&page.url), page.body);
    assert_eq!(c.browse("https://wiki.local/Nope"), NOT_FOUND_PAGE);
}

#[test]
fn every_chain_fact_lives_on_one_page_and_round_trips() {
    let c = corpus(5, 3);
    c.validate().unwrap();
    let again = Corpus::from_json(&c.to_json()).unwrap();
    assert_eq!(again.to_json(), c.to_json());
    let dup = FactTriple { id: "f".into(), subject: "A".into(), relation: "mentor".into(), object: "B".into() };
    let pages = vec![
        Page { url: "u1".into(), title: "A".into(), body: "x".into(), facts: vec![dup.clone()] },
        Page { url: "u2".into(), title: "B".into(), body: "y".into(), facts: vec![dup] },
    ];
    let chain = HopChain { qa_id: "q".into(), question: String::new(), answer: String::new(), facts: vec!["f".into()] };
    assert!(Corpus::new(pages, vec![chain]).is_err());
}

#[test]
fn oracle_chain_completes_within_hops_plus_one() {
    for hops in 1..=4 {
        let c = Arc::new(corpus(hops as u64, hops));
        let policy = ScriptedGenerator::new(c.clone(), PolicyScript::OracleChain);
        for qa in c.qa_items() {
            let t = run_trajectory(&qa, AgentMode::BaseLm, &policy, c.as_ref(), &BudgetConfig::base(), 0).unwrap();
            assert!(t.turns.len() <= hops + 1);
            let r = compute_reward(&t, &qa.answer, AgentMode::BaseLm, &ExactMatchJudge).unwrap();
            assert_eq!(r.final_reward, 1.0, "{}", qa.question);
        }
    }
}

#[test]
fn scripted_outputs_are_deterministic() {
    let c = corpus(1, 2);
    let qa = &c.qa_items()[0];
    let history = History::new();
    let budget = BudgetConfig::base();
    let req = request("p", &qa.question, &history, &budget, 17);
    let silent = scripted_generate(&c, &req, &PolicyScript::Silent).unwrap();
    assert!(!silent.contains('<'));
    for script in [PolicyScript::RandomTagged { answer_prob: 0.3 }, PolicyScript::EagerChain { answer_prob: 0.5 }] {
        assert_eq!(scripted_generate(&c, &req, &script).unwrap(), scripted_generate(&c, &req, &script).unwrap());
    }
    let exhausted = scripted_generate(&c, &GenerationRequest { turn: 3, ..req }, &PolicyScript::Fixed { outputs: vec![] });
    assert!(exhausted.is_err());
}

fn sampler(generate: LogNormalParams, seed: u64) -> LatencySampler {
    LatencySampler::new(LatencyModel { generate, tool: LogNormalParams::with_median(1.0, 0.5), seed }).unwrap()
}

#[test]
fn zero_sigma_is_constant_and_seeds_reproduce() {
    let mut s = sampler(LogNormalParams { mu: 0.5, sigma: 0.0 }, 1);
    for _ in 0..10 {
        assert_eq!(s.sample_duration(DurationKind::Generate), 0.5f64.exp());
    }
    let draw = |seed| {
        let mut s = sampler(LogNormalParams::with_median(4.0, 1.5), seed);
        (0..100).map(|_| s.sample_duration(DurationKind::Generate)).collect::<Vec<_>>()
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9), draw(10));
    assert!(LatencySampler::new(LatencyModel { generate: LogNormalParams { mu: 0.0, sigma: -1.0 }, ..LatencyModel::default() }).is_err());
}

#[test]
fn heavy_tail_spans_orders_of_magnitude() {
    let mut s = sampler(LogNormalParams::with_median(4.0, 1.5), 3);
    let mut xs: Vec<f64> = (0..10_000).map(|_| s.sample_duration(DurationKind::Generate)).collect();
    assert!(xs.iter().all(|x| *x > 0.0));
    xs.sort_by(f64::total_cmp);
    let ratio = xs[xs.len() - 1] / xs[xs.len() / 2];
    assert!(ratio > 50.0, "max/median {ratio}");
}

/// Interleaving tool draws does not perturb the generate stream.
#[test]
fn streams_are_independent() {
    let mut a = sampler(LogNormalParams::with_median(4.0, 1.5), 5);
    let mut b = sampler(LogNormalParams::with_median(4.0, 1.5), 5);
    let plain: Vec<f64> = (0..50).map(|_| a.sample_duration(DurationKind::Generate)).collect();
    let mixed: Vec<f64> = (0..50)
        .map(|_| {
            b.sample_duration(DurationKind::Tool);
            b.sample_duration(DurationKind::Generate)
        })
        .collect();
    assert_eq!(plain, mixed);
}
