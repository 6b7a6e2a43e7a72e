//! Rollout/training scheduling under synchronous, one-step-off and fully
//! asynchronous regimes.
//!
//! [`SchedulerCore`] is a pure state machine: drivers feed it completions
//! and receive dispatch and training commands. [`simulate`] drives it on a
//! discrete-event clock; [`run_realtime`] drives it with threads and wall
//! time.

mod audit;
mod backend;
mod batch;
mod core;
mod des;
mod log;
mod realtime;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::audit::{
    audit_all, one_step_overlap, staleness_audit, sync_barrier, work_conservation, AuditReport, Violation,
};
pub use self::backend::{
    AgentBackend, NullTrainer, ScriptedBackend, ScriptedRollout, ToyLearner, TrainStats, Trainer,
};
pub use self::batch::{assemble_batch, Assembly, Stamped};
pub use self::core::{
    Command, CompletedRollout, QueuedTrajectory, RolloutTask, SchedulerCore, TrainBatch, TrainGroup, Workload,
};
pub use self::des::{simulate, RolloutBackend, SimulationOutcome, TurnStep};
pub use self::log::{EventLog, LogEvent};
pub use self::realtime::{run_realtime, RealtimeOptions};
pub use self::report::{busy_fraction_csv, UtilizationReport};
pub use crate::weights::{VersionRegression, WeightStore};

use crate::reward::{AdvantageNorm, RewardError};

pub const DEFAULT_MAX_STALENESS: u64 = 4;
pub const DEFAULT_TRAIN_STEP_TIME: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchedulerMode {
    Sync,
    OneStepOff,
    FullyAsync { max_staleness: u64 },
}

impl SchedulerMode {
    /// Largest version gap a consumed trajectory may have.
    pub fn staleness_bound(&self) -> u64 {
        match self {
            SchedulerMode::Sync => 0,
            SchedulerMode::OneStepOff => 1,
            SchedulerMode::FullyAsync { max_staleness } => *max_staleness,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerMode::Sync => "sync",
            SchedulerMode::OneStepOff => "one-step-off",
            SchedulerMode::FullyAsync { .. } => "async",
        }
    }

    pub fn is_async(&self) -> bool {
        matches!(self, SchedulerMode::FullyAsync { .. })
    }
}

impl fmt::Display for SchedulerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerMode {
    type Err = SchedError;

    /// Accepts `sync`, `one-step-off` and `async` (default staleness bound).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sync" => Ok(SchedulerMode::Sync),
            "one-step-off" | "one_step_off" => Ok(SchedulerMode::OneStepOff),
            "async" | "fully-async" | "fully_async" => {
                Ok(SchedulerMode::FullyAsync { max_staleness: DEFAULT_MAX_STALENESS })
            }
            other => Err(SchedError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCondition {
    /// Run until every workload task is generated and consumed.
    WorkloadExhausted,
    /// Stop once this many training steps have completed.
    TrainSteps(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub mode: SchedulerMode,
    pub executors: usize,
    pub batch_size: usize,
    pub group_size: usize,
    pub train_step_time: f64,
    pub stop: StopCondition,
    /// Consecutive completed trajectories without a retained group before
    /// the workload is declared degenerate; defaults to 10 batches.
    pub degenerate_after: Option<usize>,
    #[serde(default)]
    pub advantage_norm: AdvantageNorm,
}

impl SchedulerConfig {
    pub fn new(mode: SchedulerMode, executors: usize, batch_size: usize, group_size: usize) -> Self {
        Self {
            mode,
            executors,
            batch_size,
            group_size,
            train_step_time: DEFAULT_TRAIN_STEP_TIME,
            stop: StopCondition::WorkloadExhausted,
            degenerate_after: None,
            advantage_norm: AdvantageNorm::Std,
        }
    }

    pub fn validate(&self) -> Result<(), SchedError> {
        if self.executors == 0 {
            return Err(SchedError::Config("executors must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(SchedError::Config("batch_size must be at least 1".into()));
        }
        if self.group_size < 2 {
            return Err(SchedError::Config("group_size must be at least 2".into()));
        }
        if !self.mode.is_async() && !self.batch_size.is_multiple_of(self.group_size) {
            return Err(SchedError::Config(format!(
                "{} mode needs batch_size ({}) to be a multiple of group_size ({})",
                self.mode, self.batch_size, self.group_size
            )));
        }
        if !(self.train_step_time.is_finite() && self.train_step_time >= 0.0) {
            return Err(SchedError::Config("train_step_time must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn degenerate_threshold(&self) -> usize {
        self.degenerate_after.unwrap_or(10 * self.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchedError {
    #[error("config error: {0}")]
    Config(String),
    #[error("deadlock at t={time:.3}: {diagnostic}")]
    Deadlock { time: f64, diagnostic: String },
    #[error("degenerate workload: {trajectories} consecutive trajectories without a retained group")]
    DegenerateWorkload { trajectories: usize },
    #[error(transparent)]
    VersionRegression(#[from] VersionRegression),
    #[error("rollout failed: {0}")]
    Rollout(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
}
