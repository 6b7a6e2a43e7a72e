use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::batch::{assemble_batch, version_gap, Assembly, Stamped};
use super::log::EventLog;
use super::{SchedError, SchedulerConfig, SchedulerMode, StopCondition};
use crate::qa::QaItem;
use crate::reward::group_advantages_with;
use crate::trajectory::Trajectory;

/// Questions to roll out, each `group_size` times, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    qa_ids: Vec<String>,
    cycle: bool,
}

impl Workload {
    pub fn new(qa_ids: Vec<String>) -> Self {
        Self { qa_ids, cycle: false }
    }

    /// Repeats the questions indefinitely.
    pub fn cycling(qa_ids: Vec<String>) -> Self {
        Self { qa_ids, cycle: true }
    }

    pub fn from_items(items: &[QaItem]) -> Self {
        Self::new(items.iter().map(|q| q.id.clone()).collect())
    }

    pub fn len(&self) -> usize {
        self.qa_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qa_ids.is_empty()
    }

    pub fn total_tasks(&self, group_size: usize) -> Option<u64> {
        if self.cycle && !self.qa_ids.is_empty() {
            None
        } else {
            Some((self.qa_ids.len() * group_size) as u64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutTask {
    /// Release order; also keys the task's random streams.
    pub id: u64,
    pub qa_index: usize,
    pub qa_id: String,
    pub group_id: u64,
    pub group_index: usize,
    /// Barrier batch in the synchronous modes.
    pub batch: Option<u64>,
    /// Policy version when the task was dispatched.
    pub submit_version: u64,
    pub start_time: Option<f64>,
    pub end_time: Option<f64>,
    pub executor_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletedRollout {
    pub reward: f64,
    /// Version stamp of every generation in order.
    pub versions: Vec<u64>,
    pub tool_calls: usize,
    pub turns: usize,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueuedTrajectory {
    pub task: RolloutTask,
    pub rollout: CompletedRollout,
    pub advantage: f64,
    pub completed_at: f64,
}

impl Stamped for QueuedTrajectory {
    fn qa_id(&self) -> &str {
        &self.task.qa_id
    }

    fn earliest_version(&self) -> Option<u64> {
        Some(self.rollout.versions.iter().copied().min().unwrap_or(self.task.submit_version))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainGroup {
    pub qa_id: String,
    pub group_id: u64,
    pub members: Vec<QueuedTrajectory>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub step: u64,
    pub batch_index: Option<u64>,
    /// Policy version the step starts from.
    pub base_version: u64,
    pub groups: Vec<TrainGroup>,
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> impl Iterator<Item = &QueuedTrajectory> {
        self.groups.iter().flat_map(|g| g.members.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Dispatch { executor: usize, task: RolloutTask },
    Train(TrainBatch),
}

#[derive(Debug, Clone)]
struct GroupSlot {
    qa_id: String,
    members: Vec<Option<(RolloutTask, CompletedRollout)>>,
    done: usize,
}

#[derive(Debug, Clone, Copy)]
struct BatchState {
    size: usize,
    completed: usize,
    trained: bool,
}

impl BatchState {
    fn generated(&self) -> bool {
        self.completed == self.size
    }
}

#[derive(Debug, Clone, Copy)]
struct Training {
    step: u64,
    batch: Option<u64>,
}

/// Scheduler state machine. All times are supplied by the driver.
#[derive(Debug)]
pub struct SchedulerCore {
    cfg: SchedulerConfig,
    workload: Workload,
    total_tasks: Option<u64>,
    version: u64,
    next_serial: u64,
    ready: VecDeque<RolloutTask>,
    executors: Vec<Option<u64>>,
    running: BTreeMap<u64, RolloutTask>,
    groups: BTreeMap<u64, GroupSlot>,
    queue: VecDeque<QueuedTrajectory>,
    training: Option<Training>,
    batches: Vec<BatchState>,
    next_train_batch: usize,
    released: u64,
    filtered: u64,
    stale_discarded: u64,
    steps_started: u64,
    steps_done: u64,
    unretained_streak: usize,
    stopped: bool,
    log: EventLog,
}

impl SchedulerCore {
    pub fn new(cfg: SchedulerConfig, workload: Workload) -> Result<Self, SchedError> {
        cfg.validate()?;
        if workload.is_empty() {
            return Err(SchedError::Config("workload is empty".into()));
        }
        let total_tasks = workload.total_tasks(cfg.group_size);
        let mut log = EventLog::new();
        log.push(
            0.0,
            "scheduler",
            "config",
            json!({
                "mode": cfg.mode.name(),
                "max_staleness": cfg.mode.staleness_bound(),
                "executors": cfg.executors,
                "batch_size": cfg.batch_size,
                "group_size": cfg.group_size,
                "train_step_time": cfg.train_step_time,
                "total_tasks": total_tasks,
            }),
        );
        Ok(Self {
            executors: vec![None; cfg.executors],
            cfg,
            workload,
            total_tasks,
            version: 0,
            next_serial: 0,
            ready: VecDeque::new(),
            running: BTreeMap::new(),
            groups: BTreeMap::new(),
            queue: VecDeque::new(),
            training: None,
            batches: Vec::new(),
            next_train_batch: 0,
            released: 0,
            filtered: 0,
            stale_discarded: 0,
            steps_started: 0,
            steps_done: 0,
            unretained_streak: 0,
            stopped: false,
            log,
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    pub fn train_steps(&self) -> u64 {
        self.steps_done
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    fn has_more(&self) -> bool {
        self.total_tasks.is_none_or(|t| self.next_serial < t)
    }

    fn live(&self) -> u64 {
        self.released - self.filtered - self.stale_discarded
    }

    /// Nothing left to generate or train.
    pub fn is_finished(&self) -> bool {
        self.stopped
            || (!self.has_more()
                && self.ready.is_empty()
                && self.running.is_empty()
                && self.training.is_none()
                && self.queue.is_empty())
    }

    pub fn start(&mut self, now: f64) -> Result<Vec<Command>, SchedError> {
        self.pump(now)
    }

    /// Logs the start of a generation turn.
    pub fn record_turn(&mut self, now: f64, task_id: u64) {
        let (executor, batch) = self.running.get(&task_id).map_or((None, None), |t| (t.executor_id, t.batch));
        self.log.push(
            now,
            executor_actor(executor),
            "turn",
            json!({ "task": task_id, "version": self.version, "batch": batch }),
        );
    }

    pub fn on_rollout_complete(
        &mut self,
        now: f64,
        task_id: u64,
        rollout: CompletedRollout,
    ) -> Result<Vec<Command>, SchedError> {
        let mut task = self
            .running
            .remove(&task_id)
            .ok_or_else(|| SchedError::Rollout(format!("completion for unknown task {task_id}")))?;
        if let Some(e) = task.executor_id {
            self.executors[e] = None;
        }
        task.end_time = Some(now);
        let mut distinct = rollout.versions.clone();
        distinct.sort_unstable();
        distinct.dedup();
        self.log.push(
            now,
            executor_actor(task.executor_id),
            "complete",
            json!({
                "task": task.id,
                "group": task.group_id,
                "batch": task.batch,
                "reward": rollout.reward,
                "versions": distinct,
                "tool_calls": rollout.tool_calls,
                "turns": rollout.turns,
                "version": self.version,
            }),
        );
        if let Some(b) = task.batch {
            self.batches[b as usize].completed += 1;
        }
        let group_id = task.group_id;
        let slot = self.groups.get_mut(&group_id).expect("group slot exists for released task");
        let index = task.group_index;
        slot.members[index] = Some((task, rollout));
        slot.done += 1;
        if slot.done == self.cfg.group_size {
            let slot = self.groups.remove(&group_id).expect("slot present");
            self.finish_group(now, group_id, slot)?;
        }
        self.pump(now)
    }

    fn finish_group(&mut self, now: f64, group_id: u64, slot: GroupSlot) -> Result<(), SchedError> {
        let members: Vec<(RolloutTask, CompletedRollout)> = slot.members.into_iter().flatten().collect();
        let rewards: Vec<f64> = members.iter().map(|(_, r)| r.reward).collect();
        let adv = group_advantages_with(&rewards, self.cfg.advantage_norm)?;
        let batch = members.first().and_then(|(t, _)| t.batch);
        if adv.degenerate {
            self.filtered += members.len() as u64;
            self.unretained_streak += members.len();
            self.log.push(
                now,
                "scheduler",
                "filtered",
                json!({ "group": group_id, "qa_id": slot.qa_id, "batch": batch, "size": members.len(), "rewards": rewards }),
            );
            let threshold = self.cfg.degenerate_threshold();
            if self.unretained_streak >= threshold {
                self.log.push(now, "scheduler", "degenerate", json!({ "trajectories": self.unretained_streak }));
                return Err(SchedError::DegenerateWorkload { trajectories: self.unretained_streak });
            }
            return Ok(());
        }
        self.unretained_streak = 0;
        self.log.push(
            now,
            "scheduler",
            "group_done",
            json!({ "group": group_id, "qa_id": slot.qa_id, "batch": batch, "rewards": rewards, "advantages": adv.values }),
        );
        for ((task, rollout), advantage) in members.into_iter().zip(adv.values) {
            self.queue.push_back(QueuedTrajectory { task, rollout, advantage, completed_at: now });
        }
        Ok(())
    }

    pub fn on_training_complete(&mut self, now: f64) -> Result<Vec<Command>, SchedError> {
        let training = self
            .training
            .take()
            .ok_or_else(|| SchedError::Training("completion without a running step".into()))?;
        self.version += 1;
        self.steps_done += 1;
        if let Some(b) = training.batch {
            self.batches[b as usize].trained = true;
        }
        self.log.push(
            now,
            "trainer",
            "publish",
            json!({ "version": self.version, "step": training.step, "batch": training.batch }),
        );
        if let StopCondition::TrainSteps(n) = self.cfg.stop {
            if self.steps_done >= n {
                self.stopped = true;
                self.log.push(now, "scheduler", "stop", json!({ "train_steps": self.steps_done }));
                return Ok(Vec::new());
            }
        }
        self.pump(now)
    }

    /// Marks the end of the run in the log.
    pub fn finish(&mut self, now: f64) {
        self.log.push(
            now,
            "scheduler",
            "finish",
            json!({ "version": self.version, "train_steps": self.steps_done, "released": self.released }),
        );
    }

    /// Human-readable summary of blocked state.
    pub fn diagnose(&self) -> String {
        let partial: Vec<String> = self
            .groups
            .iter()
            .map(|(id, g)| format!("group {id} has {}/{} done", g.done, self.cfg.group_size))
            .collect();
        let capacity = match self.cfg.mode {
            SchedulerMode::FullyAsync { max_staleness } => {
                let cap = (self.version + max_staleness + 1) * self.cfg.batch_size as u64;
                format!("admission capacity {cap}, live {}", self.live())
            }
            _ => format!("{} batches released, next to train {}", self.batches.len(), self.next_train_batch),
        };
        format!(
            "{} released, {} ready, {} running, {} queued for training (batch size {}), version {}, {capacity}; {}",
            self.released,
            self.ready.len(),
            self.running.len(),
            self.queue.len(),
            self.cfg.batch_size,
            self.version,
            if partial.is_empty() { "no partial groups".to_owned() } else { partial.join(", ") }
        )
    }

    fn pump(&mut self, now: f64) -> Result<Vec<Command>, SchedError> {
        let mut cmds = Vec::new();
        if self.stopped {
            return Ok(cmds);
        }
        loop {
            let trained = self.try_train(now, &mut cmds);
            let released = self.release(now);
            let dispatched = self.dispatch(now, &mut cmds);
            if !(trained || released || dispatched) {
                break;
            }
        }
        Ok(cmds)
    }

    fn release(&mut self, now: f64) -> bool {
        let b = self.cfg.batch_size;
        match self.cfg.mode {
            SchedulerMode::FullyAsync { max_staleness } => {
                let cap = (self.version + max_staleness + 1) * b as u64;
                let mut any = false;
                while self.has_more() && self.live() < cap {
                    self.release_one(now, None);
                    any = true;
                }
                any
            }
            SchedulerMode::Sync => {
                let open = self.batches.last().is_none_or(|s| s.trained);
                open && self.release_batch(now)
            }
            SchedulerMode::OneStepOff => {
                let k = self.batches.len();
                let open = (k == 0 || self.batches[k - 1].generated()) && (k < 2 || self.batches[k - 2].trained);
                open && self.release_batch(now)
            }
        }
    }

    fn release_batch(&mut self, now: f64) -> bool {
        if !self.has_more() {
            return false;
        }
        let index = self.batches.len() as u64;
        let mut size = 0;
        while size < self.cfg.batch_size && self.has_more() {
            self.release_one(now, Some(index));
            size += 1;
        }
        self.batches.push(BatchState { size, completed: 0, trained: false });
        true
    }

    fn release_one(&mut self, now: f64, batch: Option<u64>) {
        let serial = self.next_serial;
        self.next_serial += 1;
        let g = self.cfg.group_size as u64;
        let group_id = serial / g;
        let qa_index = (group_id % self.workload.len() as u64) as usize;
        let qa_id = self.workload.qa_ids[qa_index].clone();
        let task = RolloutTask {
            id: serial,
            qa_index,
            qa_id: qa_id.clone(),
            group_id,
            group_index: (serial % g) as usize,
            batch,
            submit_version: self.version,
            start_time: None,
            end_time: None,
            executor_id: None,
        };
        let size = self.cfg.group_size;
        self.groups.entry(group_id).or_insert_with(|| GroupSlot { qa_id: qa_id.clone(), members: vec![None; size], done: 0 });
        self.released += 1;
        self.log.push(
            now,
            "scheduler",
            "release",
            json!({ "task": serial, "group": group_id, "qa_id": qa_id, "batch": batch }),
        );
        self.ready.push_back(task);
        if !self.has_more() {
            self.log.push(now, "scheduler", "workload_exhausted", json!({ "tasks": self.released }));
        }
    }

    fn dispatch(&mut self, now: f64, cmds: &mut Vec<Command>) -> bool {
        let mut any = false;
        for executor in 0..self.executors.len() {
            if self.executors[executor].is_some() {
                continue;
            }
            let Some(mut task) = self.ready.pop_front() else { break };
            task.start_time = Some(now);
            task.executor_id = Some(executor);
            task.submit_version = self.version;
            self.executors[executor] = Some(task.id);
            self.log.push(
                now,
                executor_actor(Some(executor)),
                "dispatch",
                json!({ "task": task.id, "version": self.version, "batch": task.batch }),
            );
            self.running.insert(task.id, task.clone());
            cmds.push(Command::Dispatch { executor, task });
            any = true;
        }
        any
    }

    fn try_train(&mut self, now: f64, cmds: &mut Vec<Command>) -> bool {
        if self.training.is_some() || self.stopped {
            return false;
        }
        if let StopCondition::TrainSteps(n) = self.cfg.stop {
            if self.steps_started >= n {
                return false;
            }
        }
        let bound = self.cfg.mode.staleness_bound();
        match self.cfg.mode {
            SchedulerMode::FullyAsync { .. } => {
                let drained = !self.has_more() && self.ready.is_empty() && self.running.is_empty();
                let asm = assemble_batch(&mut self.queue, self.cfg.batch_size, self.version, bound);
                let mut progressed = self.record_discards(now, asm.discarded());
                match asm {
                    Assembly::Ready { groups, .. } => {
                        self.start_training(now, groups.into_iter().flat_map(|(_, m)| m).collect(), None, cmds);
                        progressed = true;
                    }
                    Assembly::NotReady { .. } if drained && !self.queue.is_empty() => {
                        let rest: Vec<QueuedTrajectory> = self.queue.drain(..).collect();
                        self.start_training(now, rest, None, cmds);
                        progressed = true;
                    }
                    Assembly::NotReady { .. } => {}
                }
                progressed
            }
            SchedulerMode::Sync | SchedulerMode::OneStepOff => {
                let t = self.next_train_batch;
                if t >= self.batches.len() || !self.batches[t].generated() {
                    return false;
                }
                self.next_train_batch += 1;
                let (mine, others): (VecDeque<_>, VecDeque<_>) =
                    self.queue.drain(..).partition(|q| q.task.batch == Some(t as u64));
                self.queue = others;
                let mut mine = mine;
                let len = mine.len();
                let asm = assemble_batch(&mut mine, len, self.version, bound);
                self.record_discards(now, asm.discarded());
                match asm {
                    Assembly::Ready { groups, .. } if len > 0 => {
                        let items: Vec<_> = groups.into_iter().flat_map(|(_, m)| m).collect();
                        if items.is_empty() {
                            self.skip_batch(now, t);
                        } else {
                            self.start_training(now, items, Some(t as u64), cmds);
                        }
                    }
                    _ => {
                        self.queue.extend(mine);
                        self.skip_batch(now, t);
                    }
                }
                true
            }
        }
    }

    fn skip_batch(&mut self, now: f64, t: usize) {
        self.batches[t].trained = true;
        self.log.push(now, "trainer", "train_skipped", json!({ "batch": t, "version": self.version }));
    }

    fn record_discards(&mut self, now: f64, discarded: &[QueuedTrajectory]) -> bool {
        for item in discarded {
            self.stale_discarded += 1;
            self.log.push(
                now,
                "scheduler",
                "stale_discard",
                json!({ "task": item.task.id, "gap": version_gap(item, self.version), "version": self.version }),
            );
        }
        !discarded.is_empty()
    }

    fn start_training(&mut self, now: f64, items: Vec<QueuedTrajectory>, batch: Option<u64>, cmds: &mut Vec<Command>) {
        self.steps_started += 1;
        let step = self.steps_started;
        let tasks: Vec<u64> = items.iter().map(|q| q.task.id).collect();
        let gaps: Vec<u64> = items.iter().map(|q| version_gap(q, self.version)).collect();
        self.log.push(
            now,
            "trainer",
            "train_start",
            json!({ "step": step, "version": self.version, "batch": batch, "size": items.len(), "tasks": tasks, "gaps": gaps }),
        );
        let mut groups: Vec<TrainGroup> = Vec::new();
        for item in items {
            match groups.iter_mut().find(|g| g.group_id == item.task.group_id) {
                Some(g) => g.members.push(item),
                None => groups.push(TrainGroup {
                    qa_id: item.task.qa_id.clone(),
                    group_id: item.task.group_id,
                    members: vec![item],
                }),
            }
        }
        self.training = Some(Training { step, batch });
        cmds.push(Command::Train(TrainBatch { step, batch_index: batch, base_version: self.version, groups }));
    }
}

pub(crate) fn executor_actor(executor: Option<usize>) -> String {
    executor.map_or_else(|| "executor".to_owned(), |e| format!("executor-{e}"))
}
