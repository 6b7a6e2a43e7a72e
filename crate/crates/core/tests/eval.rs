mod common;

use std::sync::Arc;

use proptest::prelude::*;
use searchrl::agent::BudgetConfig;
use searchrl::eval::{avg_pass_at_k, evaluate, min_turn_sweep, sweep_csv, EvalConfig, EvalError};
use searchrl::reward::ExactMatchJudge;
use searchrl::sim::{generate_corpus, Corpus, CorpusSpec, PolicyScript, ScriptedGenerator};
use searchrl::QaItem;

fn corpus(hops: usize) -> Arc<Corpus> {
    Arc::new(generate_corpus(&CorpusSpec { questions: 40, hops, seed: 21, ..CorpusSpec::default() }).unwrap())
}

fn scripted(corpus: &Arc<Corpus>, script: PolicyScript) -> ScriptedGenerator {
    ScriptedGenerator::new(Arc::clone(corpus), script)
}

fn cfg(k: usize, turn_limit: usize) -> EvalConfig {
    EvalConfig { k, budget: BudgetConfig { turn_limit, ..BudgetConfig::base() }, ..EvalConfig::new(3) }
}

#[test]
fn oracle_policy_solves_everything() {
    let corpus = corpus(3);
    let policy = scripted(&corpus, PolicyScript::OracleChain);
    let report = evaluate(&corpus.qa_items(), &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(4, 8)).unwrap();
    assert_eq!((report.avg_at_k, report.pass_at_k), (1.0, 1.0));
    assert_eq!(report.questions, 40);
    assert!(report.records.iter().all(|r| r.turns.iter().all(|&t| t == 4)));
    assert!((report.mean_f1 - 1.0).abs() < 1e-12);
}

#[test]
fn half_of_the_gold_answers_wrong() {
    let corpus = corpus(2);
    let policy = scripted(&corpus, PolicyScript::OracleChain);
    let items: Vec<QaItem> = corpus
        .qa_items()
        .into_iter()
        .enumerate()
        .map(|(i, mut q)| {
            if i % 2 == 1 {
                q.answer = "nobody".into();
            }
            q
        })
        .collect();
    let report = evaluate(&items, &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(4, 8)).unwrap();
    assert_eq!((report.avg_at_k, report.pass_at_k), (0.5, 0.5));
}

#[test]
fn silent_policy_scores_zero() {
    let corpus = corpus(2);
    let policy = scripted(&corpus, PolicyScript::Silent);
    let report = evaluate(&corpus.qa_items(), &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(2, 4)).unwrap();
    assert_eq!((report.avg_at_k, report.pass_at_k), (0.0, 0.0));
}

#[test]
fn evaluation_is_reproducible() {
    let corpus = corpus(2);
    let policy = scripted(&corpus, PolicyScript::EagerChain { answer_prob: 0.4 });
    let a = evaluate(&corpus.qa_items(), &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(4, 8)).unwrap();
    let b = evaluate(&corpus.qa_items(), &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(4, 8)).unwrap();
    assert_eq!(a, b);
    assert!(a.pass_at_k >= a.avg_at_k);
}

#[test]
fn bad_inputs_are_rejected() {
    let corpus = corpus(2);
    let policy = scripted(&corpus, PolicyScript::OracleChain);
    let items = corpus.qa_items();
    assert_eq!(evaluate(&items, &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(0, 8)), Err(EvalError::InvalidK));
    assert_eq!(evaluate(&[], &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(4, 8)), Err(EvalError::EmptyEvalSet));
    let blank = vec![QaItem::new("x", " ", "y")];
    assert!(matches!(
        evaluate(&blank, &policy, corpus.as_ref(), &ExactMatchJudge, &cfg(4, 8)),
        Err(EvalError::MalformedItem { .. })
    ));
}

/// A larger minimum-turn budget helps an over-eager policy, and the measured
/// accuracy tracks the exact expectation.
#[test]
fn min_turn_sweep_matches_expectation() {
    let turn_limit = 8;
    let p = 0.5;
    for hops in [2, 3] {
        let corpus = corpus(hops);
        let policy = scripted(&corpus, PolicyScript::EagerChain { answer_prob: p });
        let points = min_turn_sweep(
            &corpus.qa_items(),
            &policy,
            corpus.as_ref(),
            &ExactMatchJudge,
            &cfg(16, turn_limit),
            &[0, 1, 2, 3, 4],
        )
        .unwrap();
        for pair in points.windows(2) {
            assert!(pair[1].avg_at_k >= pair[0].avg_at_k, "{pair:?}");
            assert!(pair[1].mean_turns >= pair[0].mean_turns);
        }
        for point in &points {
            let expected = common::eager_accuracy(hops, p, point.min_turns, turn_limit);
            assert!(
                (point.avg_at_k - expected).abs() < 0.08,
                "hops {hops} min_turns {}: {} vs {expected}",
                point.min_turns,
                point.avg_at_k
            );
            assert!(point.pass_at_k >= point.avg_at_k);
        }
        assert!(sweep_csv(&points).starts_with("min_turns,avg_at_k,pass_at_k,mean_turns\n"));
    }
}

#[test]
fn expectation_oracle_sanity() {
    assert_eq!(common::eager_accuracy(2, 0.0, 0, 8), 1.0);
    assert_eq!(common::eager_accuracy(2, 1.0, 0, 8), 0.0);
    assert_eq!(common::eager_accuracy(2, 1.0, 2, 8), 0.0);
    assert!(common::eager_accuracy(2, 0.5, 2, 8) > common::eager_accuracy(2, 0.5, 0, 8));
    assert!((common::eager_accuracy(1, 0.5, 0, 8) - 0.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn pass_never_below_avg(outcomes in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..8), 1..20)) {
        let (avg, pass) = avg_pass_at_k(&outcomes);
        prop_assert!((0.0..=1.0).contains(&avg));
        prop_assert!(pass >= avg - 1e-12);
        let all = outcomes.iter().all(|o| o.iter().all(|&c| c));
        prop_assert_eq!(all, avg == 1.0);
    }
}
