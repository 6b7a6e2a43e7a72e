//! End-to-end runs over the synthetic world: frozen-policy scheduling
//! simulations and toy GRPO training.

mod toy;

pub use toy::{learning_curve, train_toy, CurvePoint, ToyTrainingOutcome, ToyTrainingSpec};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentMode, BudgetConfig};
use crate::qa::QaItem;
use crate::scheduler::{
    simulate, AgentBackend, SchedError, SchedulerConfig, SchedulerMode, SimulationOutcome, StopCondition, Workload,
    DEFAULT_TRAIN_STEP_TIME,
};
use crate::sim::{Corpus, LatencyModel, PolicyScript, ScriptedGenerator};

/// A scheduling experiment with a scripted, version-independent policy, so
/// every mode replays the same rollouts and latencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub mode: SchedulerMode,
    pub executors: usize,
    pub batch_size: usize,
    pub group_size: usize,
    /// Number of rollouts; questions are taken in corpus order, cycling.
    pub tasks: usize,
    pub train_step_time: f64,
    pub latency: LatencyModel,
    pub budget: BudgetConfig,
    pub policy: PolicyScript,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(mode: SchedulerMode, seed: u64) -> Self {
        Self {
            mode,
            executors: 8,
            batch_size: 16,
            group_size: 4,
            tasks: 64,
            train_step_time: DEFAULT_TRAIN_STEP_TIME,
            latency: LatencyModel { seed, ..LatencyModel::default() },
            budget: BudgetConfig::base(),
            policy: PolicyScript::EagerChain { answer_prob: 0.3 },
            seed,
        }
    }

    pub fn scheduler_config(&self) -> SchedulerConfig {
        let mut cfg = SchedulerConfig::new(self.mode, self.executors, self.batch_size, self.group_size);
        cfg.train_step_time = self.train_step_time;
        cfg.stop = StopCondition::WorkloadExhausted;
        cfg
    }
}

/// Questions for `n_groups` groups, cycling through `items`.
pub fn workload_items(items: &[QaItem], n_groups: usize) -> Vec<QaItem> {
    items.iter().cycle().take(if items.is_empty() { 0 } else { n_groups }).cloned().collect()
}

pub fn run_simulation(spec: &SimulationSpec, corpus: Arc<Corpus>) -> Result<SimulationOutcome, SchedError> {
    if spec.group_size == 0 || !spec.tasks.is_multiple_of(spec.group_size) {
        return Err(SchedError::Config(format!(
            "tasks ({}) must be a positive multiple of group_size ({})",
            spec.tasks, spec.group_size
        )));
    }
    let items = workload_items(&corpus.qa_items(), spec.tasks / spec.group_size);
    let workload = Workload::new(items.iter().map(|q| q.id.clone()).collect());
    let generator = ScriptedGenerator::new(Arc::clone(&corpus), spec.policy.clone());
    let backend = AgentBackend::new(items, corpus, generator, spec.seed)
        .with_mode(AgentMode::BaseLm, spec.budget)
        .with_latency(spec.latency);
    simulate(spec.scheduler_config(), workload, &backend)
}
