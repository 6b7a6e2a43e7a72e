use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentMode, BudgetConfig};
use crate::grpo::toy::{initial_policy, ToyAgent};
use crate::grpo::{ToyPolicy, DEFAULT_CLIP_EPS};
use crate::scheduler::{
    simulate, AgentBackend, EventLog, SchedError, SchedulerConfig, SchedulerMode, StopCondition, ToyLearner,
    TrainStats, UtilizationReport, WeightStore, Workload, DEFAULT_MAX_STALENESS,
};
use crate::sim::{Corpus, LatencyModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyTrainingSpec {
    pub executors: usize,
    pub batch_size: usize,
    pub group_size: usize,
    pub steps: u64,
    pub max_staleness: u64,
    pub learning_rate: f64,
    pub clip_eps: f64,
    pub answer_bias: f64,
    pub train_step_time: f64,
    pub latency: LatencyModel,
    pub budget: BudgetConfig,
    /// Consecutive unretained trajectories before giving up.
    pub degenerate_after: Option<usize>,
    pub seed: u64,
}

impl ToyTrainingSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            executors: 8,
            batch_size: 16,
            group_size: 4,
            steps: 200,
            max_staleness: DEFAULT_MAX_STALENESS,
            learning_rate: 0.1,
            clip_eps: DEFAULT_CLIP_EPS,
            answer_bias: 1.0,
            train_step_time: 10.0,
            latency: LatencyModel::default(),
            budget: BudgetConfig { turn_limit: 8, ..BudgetConfig::base() },
            degenerate_after: None,
            seed,
        }
    }
}

/// Mean reward and tool calls of trajectories first generated at a version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub version: u64,
    pub trajectories: usize,
    pub mean_reward: f64,
    pub mean_tool_calls: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyTrainingOutcome {
    pub report: UtilizationReport,
    pub log: EventLog,
    pub curve: Vec<CurvePoint>,
    pub stats: Vec<TrainStats>,
    pub policy: ToyPolicy,
    pub initial_reward: f64,
    pub final_reward: f64,
    pub initial_tool_calls: f64,
    pub final_tool_calls: f64,
}

impl ToyTrainingOutcome {
    pub fn reward_csv(&self) -> String {
        let mut out = String::from("version,trajectories,mean_reward\n");
        for p in &self.curve {
            out.push_str(&format!("{},{},{:.6}\n", p.version, p.trajectories, p.mean_reward));
        }
        out
    }

    pub fn tool_call_csv(&self) -> String {
        let mut out = String::from("version,trajectories,mean_tool_calls\n");
        for p in &self.curve {
            out.push_str(&format!("{},{},{:.6}\n", p.version, p.trajectories, p.mean_tool_calls));
        }
        out
    }
}

/// Reward and tool-call curve over completed rollouts, keyed by the policy
/// version of their first generation.
pub fn learning_curve(log: &EventLog) -> Vec<CurvePoint> {
    let mut buckets: BTreeMap<u64, (usize, f64, f64)> = BTreeMap::new();
    for e in log.of_kind("complete") {
        let version = e.u64_list("versions").into_iter().min().or_else(|| e.u64("version")).unwrap_or(0);
        let entry = buckets.entry(version).or_insert((0, 0.0, 0.0));
        entry.0 += 1;
        entry.1 += e.f64("reward").unwrap_or(0.0);
        entry.2 += e.u64("tool_calls").unwrap_or(0) as f64;
    }
    buckets
        .into_iter()
        .map(|(version, (n, r, t))| CurvePoint {
            version,
            trajectories: n,
            mean_reward: r / n as f64,
            mean_tool_calls: t / n as f64,
        })
        .collect()
}

fn window_mean(curve: &[CurvePoint], lo: u64, hi: u64, f: impl Fn(&CurvePoint) -> f64) -> f64 {
    let (n, sum) = curve
        .iter()
        .filter(|p| p.version >= lo && p.version < hi)
        .fold((0usize, 0.0), |(n, s), p| (n + p.trajectories, s + f(p) * p.trajectories as f64));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Fully asynchronous GRPO training of the toy agent on a corpus.
pub fn train_toy(spec: &ToyTrainingSpec, corpus: Arc<Corpus>) -> Result<ToyTrainingOutcome, SchedError> {
    let store = Arc::new(WeightStore::new(initial_policy(spec.answer_bias)));
    let learner = Arc::new(ToyLearner::new(Arc::clone(&store), spec.learning_rate).with_clip_eps(spec.clip_eps));
    let items = corpus.qa_items();
    let workload = Workload::cycling(items.iter().map(|q| q.id.clone()).collect());
    let backend = AgentBackend::new(items, corpus, ToyAgent::new(Arc::clone(&store)), spec.seed)
        .with_mode(AgentMode::BaseLm, spec.budget)
        .with_latency(spec.latency)
        .with_own_versions()
        .with_trainer(learner.clone());
    let mut cfg = SchedulerConfig::new(
        SchedulerMode::FullyAsync { max_staleness: spec.max_staleness },
        spec.executors,
        spec.batch_size,
        spec.group_size,
    );
    cfg.train_step_time = spec.train_step_time;
    cfg.stop = StopCondition::TrainSteps(spec.steps);
    cfg.degenerate_after = spec.degenerate_after;
    let outcome = simulate(cfg, workload, &backend)?;

    let curve = learning_curve(&outcome.log);
    let window = (spec.steps / 20).max(1);
    let last = outcome.report.final_version;
    let early = |f: fn(&CurvePoint) -> f64| window_mean(&curve, 0, window, f);
    let late = |f: fn(&CurvePoint) -> f64| window_mean(&curve, last.saturating_sub(window), last + 1, f);
    Ok(ToyTrainingOutcome {
        initial_reward: early(|p| p.mean_reward),
        final_reward: late(|p| p.mean_reward),
        initial_tool_calls: early(|p| p.mean_tool_calls),
        final_tool_calls: late(|p| p.mean_tool_calls),
        policy: (*store.snapshot().1).clone(),
        stats: learner.stats(),
        report: outcome.report,
        log: outcome.log,
        curve,
    })
}
