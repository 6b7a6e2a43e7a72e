use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::core::{CompletedRollout, RolloutTask, TrainBatch};
use super::des::{RolloutBackend, TurnStep};
use super::SchedError;
use crate::agent::{
    AgentMode, BudgetConfig, Generation, GenerationClient, GenerationError, GenerationRequest, ToolClient,
    TrajectoryRunner,
};
use crate::grpo::{surrogate_loss, Sequence, ToyPolicy, DEFAULT_CLIP_EPS};
use crate::qa::QaItem;
use crate::reward::{compute_reward, ExactMatchJudge, Judge};
use crate::rng::derive_seed;
use crate::sim::{DurationKind, LatencyModel, LatencySampler};
use crate::trajectory::Trajectory;
use crate::weights::WeightStore;

/// Consumes a training batch and publishes the next version.
pub trait Trainer: Send + Sync {
    fn train(&self, batch: &TrainBatch, new_version: u64) -> Result<(), SchedError>;
}

/// Training with no parameters to update.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullTrainer;

impl Trainer for NullTrainer {
    fn train(&self, _batch: &TrainBatch, _new_version: u64) -> Result<(), SchedError> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub step: u64,
    pub version: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub trajectories: usize,
    pub tokens: usize,
    pub clipped_tokens: usize,
    pub mean_reward: f64,
}

/// One clipped-surrogate gradient step per batch on a [`ToyPolicy`].
#[derive(Debug)]
pub struct ToyLearner {
    store: Arc<WeightStore<ToyPolicy>>,
    learning_rate: f64,
    clip_eps: f64,
    stats: Mutex<Vec<TrainStats>>,
}

impl ToyLearner {
    pub fn new(store: Arc<WeightStore<ToyPolicy>>, learning_rate: f64) -> Self {
        Self { store, learning_rate, clip_eps: DEFAULT_CLIP_EPS, stats: Mutex::new(Vec::new()) }
    }

    pub fn with_clip_eps(mut self, clip_eps: f64) -> Self {
        self.clip_eps = clip_eps;
        self
    }

    pub fn stats(&self) -> Vec<TrainStats> {
        self.stats.lock().expect("stats lock").clone()
    }
}

impl Trainer for ToyLearner {
    fn train(&self, batch: &TrainBatch, new_version: u64) -> Result<(), SchedError> {
        let (_, policy) = self.store.snapshot();
        let sequences: Vec<Sequence<'_>> = batch
            .members()
            .filter_map(|m| m.rollout.trajectory.as_ref().map(|t| Sequence::recorded(t.tokens(), m.advantage)))
            .collect();
        let mut next = (*policy).clone();
        let mut stats = TrainStats {
            step: batch.step,
            version: new_version,
            loss: 0.0,
            grad_norm: 0.0,
            trajectories: batch.len(),
            tokens: 0,
            clipped_tokens: 0,
            mean_reward: batch.members().map(|m| m.rollout.reward).sum::<f64>() / batch.len().max(1) as f64,
        };
        if !sequences.is_empty() {
            let out = surrogate_loss(&policy, &sequences, Some(self.clip_eps))
                .map_err(|e| SchedError::Training(e.to_string()))?;
            for (p, g) in next.params_mut().iter_mut().zip(&out.grad) {
                *p -= self.learning_rate * g;
            }
            stats.loss = out.loss;
            stats.grad_norm = out.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            stats.tokens = out.tokens;
            stats.clipped_tokens = out.clipped_tokens;
        }
        self.store.publish(new_version, next)?;
        self.stats.lock().expect("stats lock").push(stats);
        Ok(())
    }
}

/// Overrides the model version stamp with the scheduler's version.
struct Stamped<'a, G: ?Sized> {
    inner: &'a G,
    version: u64,
}

impl<G: GenerationClient + ?Sized> GenerationClient for Stamped<'_, G> {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        let mut g = self.inner.generate(request)?;
        g.model_version = self.version;
        Ok(g)
    }
}

pub struct AgentRunner {
    runner: TrajectoryRunner,
    latency: LatencySampler,
    qa_index: usize,
}

/// Real agent turns against a tool client, with simulated latency.
pub struct AgentBackend<G> {
    items: Vec<QaItem>,
    tools: Arc<dyn ToolClient>,
    generator: G,
    judge: Arc<dyn Judge>,
    mode: AgentMode,
    budget: BudgetConfig,
    latency: LatencyModel,
    seed: u64,
    stamp_versions: bool,
    trainer: Arc<dyn Trainer>,
    keep_trajectories: bool,
    kept: Mutex<Vec<Trajectory>>,
}

impl<G: GenerationClient> AgentBackend<G> {
    /// `items` must be indexed like the workload's question list.
    pub fn new(items: Vec<QaItem>, tools: Arc<dyn ToolClient>, generator: G, seed: u64) -> Self {
        Self {
            items,
            tools,
            generator,
            judge: Arc::new(ExactMatchJudge),
            mode: AgentMode::BaseLm,
            budget: BudgetConfig::base(),
            latency: LatencyModel::default(),
            seed,
            stamp_versions: true,
            trainer: Arc::new(NullTrainer),
            keep_trajectories: false,
            kept: Mutex::new(Vec::new()),
        }
    }

    pub fn with_judge(mut self, judge: Arc<dyn Judge>) -> Self {
        self.judge = judge;
        self
    }

    pub fn with_mode(mut self, mode: AgentMode, budget: BudgetConfig) -> Self {
        self.mode = mode;
        self.budget = budget;
        self
    }

    pub fn with_latency(mut self, latency: LatencyModel) -> Self {
        self.latency = latency;
        self
    }

    pub fn with_trainer(mut self, trainer: Arc<dyn Trainer>) -> Self {
        self.trainer = trainer;
        self
    }

    /// Keep the generator's own version stamps (it tracks published weights).
    pub fn with_own_versions(mut self) -> Self {
        self.stamp_versions = false;
        self
    }

    pub fn keep_trajectories(mut self) -> Self {
        self.keep_trajectories = true;
        self
    }

    pub fn take_trajectories(&self) -> Vec<Trajectory> {
        std::mem::take(&mut *self.kept.lock().expect("trajectory lock"))
    }

    pub fn generator(&self) -> &G {
        &self.generator
    }
}

impl<G: GenerationClient> RolloutBackend for AgentBackend<G> {
    type Runner = AgentRunner;

    fn begin(&self, task: &RolloutTask) -> Result<AgentRunner, SchedError> {
        let qa = self
            .items
            .get(task.qa_index)
            .ok_or_else(|| SchedError::Rollout(format!("no question at index {}", task.qa_index)))?;
        let runner = TrajectoryRunner::new(qa, self.mode, self.budget, derive_seed(self.seed, "rollout", task.id));
        let model = LatencyModel { seed: derive_seed(self.seed, "latency", task.id), ..self.latency };
        let latency = LatencySampler::new(model).map_err(|e| SchedError::Config(e.to_string()))?;
        Ok(AgentRunner { runner, latency, qa_index: task.qa_index })
    }

    fn advance(&self, runner: &mut AgentRunner, version: u64) -> Result<TurnStep, SchedError> {
        let report = if self.stamp_versions {
            runner.runner.advance(&Stamped { inner: &self.generator, version }, &*self.tools)
        } else {
            runner.runner.advance(&self.generator, &*self.tools)
        };
        let mut duration = 0.0;
        for _ in 0..report.generations {
            duration += runner.latency.sample_duration(DurationKind::Generate);
        }
        for _ in 0..report.tool_calls {
            duration += runner.latency.sample_duration(DurationKind::Tool);
        }
        Ok(TurnStep { duration, finished: report.finished })
    }

    fn finish(&self, runner: AgentRunner) -> Result<CompletedRollout, SchedError> {
        let gold = &self.items[runner.qa_index].answer;
        let mut traj = runner.runner.into_trajectory();
        let record = compute_reward(&traj, gold, self.mode, &*self.judge)?;
        let reward = record.final_reward;
        traj.reward = Some(record);
        if self.keep_trajectories {
            self.kept.lock().expect("trajectory lock").push(traj.clone());
        }
        Ok(CompletedRollout {
            reward,
            versions: traj.model_versions(),
            tool_calls: traj.tool_calls(),
            turns: traj.turns.len(),
            trajectory: Some(traj),
        })
    }

    fn train(&self, batch: &TrainBatch, new_version: u64) -> Result<(), SchedError> {
        self.trainer.train(batch, new_version)
    }
}

/// A rollout with fixed per-turn durations and reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedRollout {
    pub turn_durations: Vec<f64>,
    pub reward: f64,
}

/// Replays scripted rollouts; task `i` uses entry `i % len`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedBackend {
    rollouts: Vec<ScriptedRollout>,
}

pub struct ScriptedRunner {
    rollout: ScriptedRollout,
    turn: usize,
    versions: Vec<u64>,
}

impl ScriptedBackend {
    pub fn new(rollouts: Vec<ScriptedRollout>) -> Self {
        Self { rollouts }
    }

    /// One single-turn rollout per duration, rewards alternating 1, 0.
    pub fn single_turn(durations: &[f64]) -> Self {
        Self::new(
            durations
                .iter()
                .enumerate()
                .map(|(i, d)| ScriptedRollout { turn_durations: vec![*d], reward: f64::from(u8::from(i % 2 == 0)) })
                .collect(),
        )
    }
}

impl RolloutBackend for ScriptedBackend {
    type Runner = ScriptedRunner;

    fn begin(&self, task: &RolloutTask) -> Result<ScriptedRunner, SchedError> {
        if self.rollouts.is_empty() {
            return Err(SchedError::Config("scripted backend has no rollouts".into()));
        }
        let rollout = self.rollouts[(task.id % self.rollouts.len() as u64) as usize].clone();
        if rollout.turn_durations.is_empty() {
            return Err(SchedError::Config(format!("scripted rollout for task {} has no turns", task.id)));
        }
        Ok(ScriptedRunner { rollout, turn: 0, versions: Vec::new() })
    }

    fn advance(&self, runner: &mut ScriptedRunner, version: u64) -> Result<TurnStep, SchedError> {
        let duration = runner.rollout.turn_durations[runner.turn];
        runner.turn += 1;
        runner.versions.push(version);
        Ok(TurnStep { duration, finished: runner.turn == runner.rollout.turn_durations.len() })
    }

    fn finish(&self, runner: ScriptedRunner) -> Result<CompletedRollout, SchedError> {
        Ok(CompletedRollout {
            reward: runner.rollout.reward,
            turns: runner.versions.len(),
            versions: runner.versions,
            tool_calls: 0,
            trajectory: None,
        })
    }

    fn train(&self, _batch: &TrainBatch, _new_version: u64) -> Result<(), SchedError> {
        Ok(())
    }
}
