use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::core::{Command, CompletedRollout, RolloutTask, SchedulerCore, TrainBatch, Workload};
use super::des::{RolloutBackend, SimulationOutcome};
use super::report::UtilizationReport;
use super::{SchedError, SchedulerConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealtimeOptions {
    /// Wall seconds slept per simulated second of turn or training cost.
    pub time_scale: f64,
    /// Longest wait for any message before declaring a stall.
    pub stall_timeout: Duration,
}

impl Default for RealtimeOptions {
    fn default() -> Self {
        Self { time_scale: 0.001, stall_timeout: Duration::from_secs(30) }
    }
}

enum Msg {
    Turn(u64),
    Done(u64, Result<CompletedRollout, SchedError>),
    Trained(Result<(), SchedError>),
}

fn pause(seconds: f64, scale: f64) {
    let wall = seconds * scale;
    if wall > 0.0 && wall.is_finite() {
        thread::sleep(Duration::from_secs_f64(wall));
    }
}

/// Runs the scheduler with one thread per executor and a trainer thread.
/// Log times are wall-clock seconds divided by `time_scale`.
pub fn run_realtime<B>(
    cfg: SchedulerConfig,
    workload: Workload,
    backend: &B,
    opts: RealtimeOptions,
) -> Result<SimulationOutcome, SchedError>
where
    B: RolloutBackend,
{
    if !(opts.time_scale.is_finite() && opts.time_scale > 0.0) {
        return Err(SchedError::Config("time_scale must be positive".into()));
    }
    let train_step_time = cfg.train_step_time;
    let executors = cfg.executors;
    let mut core = SchedulerCore::new(cfg, workload)?;
    let version = AtomicU64::new(0);
    let (tx, rx) = mpsc::channel::<Msg>();
    let started = Instant::now();
    let clock = || started.elapsed().as_secs_f64() / opts.time_scale;

    thread::scope(|scope| {
        let mut workers: Vec<Sender<Option<RolloutTask>>> = Vec::with_capacity(executors);
        for _ in 0..executors {
            let (task_tx, task_rx) = mpsc::channel::<Option<RolloutTask>>();
            let tx = tx.clone();
            let version = &version;
            scope.spawn(move || {
                while let Ok(Some(task)) = task_rx.recv() {
                    let id = task.id;
                    let result = (|| {
                        let mut runner = backend.begin(&task)?;
                        loop {
                            let _ = tx.send(Msg::Turn(id));
                            let step = backend.advance(&mut runner, version.load(Ordering::SeqCst))?;
                            pause(step.duration, opts.time_scale);
                            if step.finished {
                                break;
                            }
                        }
                        backend.finish(runner)
                    })();
                    if tx.send(Msg::Done(id, result)).is_err() {
                        break;
                    }
                }
            });
            workers.push(task_tx);
        }
        let (train_tx, train_rx) = mpsc::channel::<TrainBatch>();
        {
            let tx = tx.clone();
            scope.spawn(move || {
                while let Ok(batch) = train_rx.recv() {
                    pause(train_step_time, opts.time_scale);
                    let result = backend.train(&batch, batch.base_version + 1);
                    if tx.send(Msg::Trained(result)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let mut in_flight = 0usize;
        let mut training = false;
        let apply = |cmds: Vec<Command>, in_flight: &mut usize, training: &mut bool| {
            for cmd in cmds {
                match cmd {
                    Command::Dispatch { executor, task } => {
                        *in_flight += 1;
                        let _ = workers[executor].send(Some(task));
                    }
                    Command::Train(batch) => {
                        *training = true;
                        let _ = train_tx.send(batch);
                    }
                }
            }
        };

        let result = (|| {
            let cmds = core.start(clock())?;
            apply(cmds, &mut in_flight, &mut training);
            while !core.is_finished() {
                if in_flight == 0 && !training {
                    return Err(SchedError::Deadlock { time: clock(), diagnostic: core.diagnose() });
                }
                let msg = match rx.recv_timeout(opts.stall_timeout) {
                    Ok(m) => m,
                    Err(RecvTimeoutError::Timeout) => {
                        return Err(SchedError::Deadlock {
                            time: clock(),
                            diagnostic: format!("no progress within {:?}: {}", opts.stall_timeout, core.diagnose()),
                        })
                    }
                    Err(RecvTimeoutError::Disconnected) => {
                        return Err(SchedError::Rollout("all actors exited".into()));
                    }
                };
                let cmds = match msg {
                    Msg::Turn(id) => {
                        core.record_turn(clock(), id);
                        Vec::new()
                    }
                    Msg::Done(id, rollout) => {
                        in_flight -= 1;
                        core.on_rollout_complete(clock(), id, rollout?)?
                    }
                    Msg::Trained(result) => {
                        result?;
                        training = false;
                        let cmds = core.on_training_complete(clock())?;
                        version.store(core.version(), Ordering::SeqCst);
                        cmds
                    }
                };
                apply(cmds, &mut in_flight, &mut training);
            }
            core.finish(clock());
            Ok(())
        })();
        for w in &workers {
            let _ = w.send(None);
        }
        result
    })?;

    let log = core.into_log();
    let report = UtilizationReport::from_log(&log)?;
    Ok(SimulationOutcome { report, log })
}
