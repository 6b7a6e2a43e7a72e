//! Shared builders and reference implementations for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use searchrl::agent::{AgentAction, History};
use searchrl::grpo::{PolicyState, TokenSample, ToyPolicy};
use searchrl::reward::GroupBatch;
use searchrl::{Trajectory, Turn};

/// Word-level F1 written from the definition: whitespace split, strip
/// non-alphanumerics from each word, lowercase, drop articles.
pub fn f1_oracle(prediction: &str, reference: &str) -> f64 {
    fn bag(text: &str) -> BTreeMap<String, usize> {
        let mut bag = BTreeMap::new();
        for word in text.split_whitespace() {
            let w: String = word.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
            if w.is_empty() || w == "a" || w == "an" || w == "the" {
                continue;
            }
            *bag.entry(w).or_insert(0) += 1;
        }
        bag
    }
    let p = bag(prediction);
    let g = bag(reference);
    let np: usize = p.values().sum();
    let ng: usize = g.values().sum();
    if np == 0 && ng == 0 {
        return 1.0;
    }
    if np == 0 || ng == 0 {
        return 0.0;
    }
    let common: usize = p.iter().map(|(w, c)| (*c).min(*g.get(w).unwrap_or(&0))).sum();
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / np as f64;
    let recall = common as f64 / ng as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Central finite-difference gradient.
pub fn finite_difference(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// A trajectory holding only the given token decisions in one turn.
pub fn token_trajectory(qa_id: &str, tokens: Vec<TokenSample>) -> Trajectory {
    Trajectory {
        qa_id: qa_id.to_owned(),
        question: "q?".to_owned(),
        turns: vec![Turn {
            index: 0,
            output: String::new(),
            action: AgentAction::answer("x"),
            effective: true,
            format_ok: true,
            forced: false,
            tool_result: None,
            summary: None,
            model_version: 0,
            tokens,
        }],
        history: History::new(),
        final_answer: Some("x".to_owned()),
        valid: true,
        failure: None,
        reward: None,
        advantage: None,
    }
}

pub fn random_state(rng: &mut impl Rng, n_actions: usize, n_features: usize) -> PolicyState {
    let features = (0..n_features).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut allowed: Vec<bool> = (0..n_actions).map(|_| rng.random_bool(0.8)).collect();
    let keep = rng.random_range(0..n_actions);
    allowed[keep] = true;
    PolicyState { features, allowed }
}

/// A random policy pair and group: at most 100 parameters, G in 2..=8,
/// sequences of 1..=20 tokens sampled from the old policy. The current
/// policy is a small perturbation so both clipped and unclipped tokens occur.
pub fn random_grpo_instance(rng: &mut impl Rng) -> (ToyPolicy, ToyPolicy, GroupBatch) {
    let n_actions = rng.random_range(2..=10);
    let n_features = rng.random_range(1..=(100 / n_actions).min(10));
    let old = ToyPolicy::random(n_actions, n_features, 1.0, rng);
    let mut current = old.clone();
    for p in current.params_mut() {
        *p += rng.random_range(-0.3..0.3);
    }
    let g = rng.random_range(2..=8);
    let mut trajectories = Vec::with_capacity(g);
    for _ in 0..g {
        let len = rng.random_range(1..=20);
        let tokens = (0..len)
            .map(|_| {
                let state = random_state(rng, n_actions, n_features);
                old.sample(&state, rng).expect("legal action exists")
            })
            .collect();
        trajectories.push(token_trajectory("q", tokens));
    }
    let mut rewards: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
    rewards[0] = 0.0;
    rewards[1] = 1.0;
    let group = GroupBatch::new("q", trajectories, rewards).expect("g >= 2");
    (current, old, group)
}

/// Expected accuracy of the eager chain-follower on an `hops`-hop question:
/// each turn it answers its current frontier with probability `p`, otherwise
/// it searches the next hop; a complete chain is always answered; answers
/// before `min_turns` are suppressed and the last turn forces an answer.
pub fn eager_accuracy(hops: usize, p: f64, min_turns: usize, turn_limit: usize) -> f64 {
    // value[turn][progress] = probability of ending correct from this state.
    let mut value = vec![vec![0.0; hops + 1]; turn_limit + 1];
    for turn in (0..turn_limit).rev() {
        for progress in 0..=hops {
            let complete = progress == hops;
            let last = turn + 1 == turn_limit;
            value[turn][progress] = if last {
                f64::from(u8::from(complete))
            } else if complete {
                if turn >= min_turns {
                    1.0
                } else {
                    value[turn + 1][progress]
                }
            } else {
                let answer = if turn >= min_turns { 0.0 } else { value[turn + 1][progress] };
                p * answer + (1.0 - p) * value[turn + 1][progress + 1]
            };
        }
    }
    value[0][0]
}
