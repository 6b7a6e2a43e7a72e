use std::sync::Arc;

use searchrl::grpo::toy::initial_policy;
use searchrl::scheduler::audit_all;
use searchrl::sim::{generate_corpus, Corpus, CorpusSpec};
use searchrl::train::{learning_curve, train_toy, ToyTrainingSpec};

fn corpus() -> Arc<Corpus> {
    Arc::new(generate_corpus(&CorpusSpec { seed: 4, ..CorpusSpec::default() }).unwrap())
}

#[test]
fn async_training_learns_to_search() {
    let spec = ToyTrainingSpec { steps: 120, ..ToyTrainingSpec::new(4) };
    let out = train_toy(&spec, corpus()).unwrap();
    assert!(out.final_reward > out.initial_reward + 0.3, "{} -> {}", out.initial_reward, out.final_reward);
    assert!(out.final_tool_calls > out.initial_tool_calls);
    assert_eq!(out.report.train_steps, 120);
    assert!(audit_all(&out.log).is_clean());
    assert_eq!(learning_curve(&out.log), out.curve);
    assert!(out.reward_csv().lines().count() > 1);
}

#[test]
fn zero_learning_rate_leaves_the_policy_alone() {
    let spec = ToyTrainingSpec { steps: 20, learning_rate: 0.0, ..ToyTrainingSpec::new(4) };
    let out = train_toy(&spec, corpus()).unwrap();
    assert_eq!(out.policy, initial_policy(spec.answer_bias));
    assert!((out.final_reward - out.initial_reward).abs() < 0.25);
}

#[test]
fn training_is_reproducible() {
    let spec = ToyTrainingSpec { steps: 15, ..ToyTrainingSpec::new(8) };
    let a = train_toy(&spec, corpus()).unwrap();
    let b = train_toy(&spec, corpus()).unwrap();
    assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
    assert_eq!(a.policy, b.policy);
}
