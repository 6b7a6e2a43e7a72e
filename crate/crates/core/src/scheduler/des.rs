use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::core::{Command, CompletedRollout, RolloutTask, SchedulerCore, TrainBatch, Workload};
use super::log::EventLog;
use super::report::UtilizationReport;
use super::{SchedError, SchedulerConfig};

/// Simulated cost of one agent turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnStep {
    pub duration: f64,
    pub finished: bool,
}

/// What executors and the trainer actually do. Drivers own the clock.
pub trait RolloutBackend: Sync {
    type Runner: Send;

    fn begin(&self, task: &RolloutTask) -> Result<Self::Runner, SchedError>;
    /// Runs one turn; `version` is the policy version at the turn's start.
    fn advance(&self, runner: &mut Self::Runner, version: u64) -> Result<TurnStep, SchedError>;
    fn finish(&self, runner: Self::Runner) -> Result<CompletedRollout, SchedError>;
    /// Applies one training step and publishes `new_version`.
    fn train(&self, batch: &TrainBatch, new_version: u64) -> Result<(), SchedError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub report: UtilizationReport,
    pub log: EventLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    TurnDone(u64),
    TrainDone,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Driver<'a, B: RolloutBackend> {
    backend: &'a B,
    core: SchedulerCore,
    heap: BinaryHeap<Pending>,
    seq: u64,
    now: f64,
    runners: BTreeMap<u64, (B::Runner, bool)>,
    training: Option<TrainBatch>,
    train_step_time: f64,
}

impl<B: RolloutBackend> Driver<'_, B> {
    fn schedule(&mut self, delay: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Pending { time: self.now + delay.max(0.0), seq: self.seq, kind });
    }

    fn turn(&mut self, task_id: u64) -> Result<(), SchedError> {
        self.core.record_turn(self.now, task_id);
        let version = self.core.version();
        let (runner, finished) = self.runners.get_mut(&task_id).expect("runner for running task");
        let step = self.backend.advance(runner, version)?;
        *finished = step.finished;
        self.schedule(step.duration, EventKind::TurnDone(task_id));
        Ok(())
    }

    fn apply(&mut self, cmds: Vec<Command>) -> Result<(), SchedError> {
        for cmd in cmds {
            match cmd {
                Command::Dispatch { task, .. } => {
                    let runner = self.backend.begin(&task)?;
                    self.runners.insert(task.id, (runner, false));
                    self.turn(task.id)?;
                }
                Command::Train(batch) => {
                    self.training = Some(batch);
                    self.schedule(self.train_step_time, EventKind::TrainDone);
                }
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<SimulationOutcome, SchedError> {
        let cmds = self.core.start(0.0)?;
        self.apply(cmds)?;
        while !self.core.is_finished() {
            let Some(ev) = self.heap.pop() else {
                return Err(SchedError::Deadlock { time: self.now, diagnostic: self.core.diagnose() });
            };
            self.now = ev.time;
            let cmds = match ev.kind {
                EventKind::TurnDone(task_id) => {
                    let finished = self.runners.get(&task_id).is_some_and(|(_, f)| *f);
                    if finished {
                        let (runner, _) = self.runners.remove(&task_id).expect("runner present");
                        let rollout = self.backend.finish(runner)?;
                        self.core.on_rollout_complete(self.now, task_id, rollout)?
                    } else {
                        self.turn(task_id)?;
                        Vec::new()
                    }
                }
                EventKind::TrainDone => {
                    let batch = self.training.take().expect("training in flight");
                    self.backend.train(&batch, self.core.version() + 1)?;
                    self.core.on_training_complete(self.now)?
                }
            };
            self.apply(cmds)?;
        }
        self.core.finish(self.now);
        let log = self.core.into_log();
        let report = UtilizationReport::from_log(&log)?;
        Ok(SimulationOutcome { report, log })
    }
}

/// Runs the scheduler to completion on a logical clock.
pub fn simulate<B: RolloutBackend>(
    cfg: SchedulerConfig,
    workload: Workload,
    backend: &B,
) -> Result<SimulationOutcome, SchedError> {
    let train_step_time = cfg.train_step_time;
    let core = SchedulerCore::new(cfg, workload)?;
    Driver {
        backend,
        core,
        heap: BinaryHeap::new(),
        seq: 0,
        now: 0.0,
        runners: BTreeMap::new(),
        training: None,
        train_step_time,
    }
    .run()
}
