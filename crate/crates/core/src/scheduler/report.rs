use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::log::{EventLog, LogEvent};
use super::SchedError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub mode: String,
    pub executors: usize,
    pub total_time: f64,
    /// Executor busy time over the window that ends when the first executor
    /// runs out of work for good.
    pub executor_busy_fraction: f64,
    /// Executor busy time over the whole run.
    pub overall_busy_fraction: f64,
    pub drain_start: f64,
    pub trainer_busy_fraction: f64,
    pub trajectories_completed: u64,
    pub trajectories_trained: u64,
    pub filtered_out: u64,
    pub stale_discarded: u64,
    pub train_steps: u64,
    pub final_version: u64,
    /// Completed trajectories per simulated hour.
    pub throughput: f64,
    pub staleness_histogram: BTreeMap<u64, u64>,
    /// Completed trajectories whose generations carry two or more versions.
    pub spanning_trajectories: u64,
}

impl UtilizationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Rebuilds the report from an event log.
    pub fn from_log(log: &EventLog) -> Result<Self, SchedError> {
        let config = log
            .of_kind("config")
            .next()
            .ok_or_else(|| SchedError::Config("event log has no config event".into()))?;
        let mode = config.str("mode").unwrap_or("unknown").to_owned();
        let executors = config.u64("executors").unwrap_or(1).max(1) as usize;
        let total_time = log.events().iter().map(|e| e.time).fold(0.0, f64::max);

        let intervals = executor_intervals(log, total_time);
        let drain_start = drain_start(log, executors).unwrap_or(total_time);
        let overall_busy_fraction = busy_fraction(&intervals, 0.0, total_time, executors);
        let executor_busy_fraction = if drain_start > 0.0 {
            busy_fraction(&intervals, 0.0, drain_start, executors)
        } else {
            overall_busy_fraction
        };
        let trainer = trainer_intervals(log, total_time);
        let trainer_busy_fraction = busy_fraction(&trainer, 0.0, total_time, 1);

        let mut staleness_histogram = BTreeMap::new();
        let mut trajectories_trained = 0;
        for e in log.of_kind("train_start") {
            for gap in e.u64_list("gaps") {
                *staleness_histogram.entry(gap).or_insert(0) += 1;
                trajectories_trained += 1;
            }
        }
        let completes: Vec<&LogEvent> = log.of_kind("complete").collect();
        let trajectories_completed = completes.len() as u64;
        let spanning_trajectories = completes.iter().filter(|e| e.u64_list("versions").len() >= 2).count() as u64;
        let filtered_out = log.of_kind("filtered").filter_map(|e| e.u64("size")).sum();
        let stale_discarded = log.of_kind("stale_discard").count() as u64;
        let publishes: Vec<&LogEvent> = log.of_kind("publish").collect();
        let train_steps = publishes.len() as u64;
        let final_version = publishes.iter().filter_map(|e| e.u64("version")).max().unwrap_or(0);
        let throughput = if total_time > 0.0 { trajectories_completed as f64 / total_time * 3600.0 } else { 0.0 };

        Ok(Self {
            mode,
            executors,
            total_time,
            executor_busy_fraction,
            overall_busy_fraction,
            drain_start,
            trainer_busy_fraction,
            trajectories_completed,
            trajectories_trained,
            filtered_out,
            stale_discarded,
            train_steps,
            final_version,
            throughput,
            staleness_histogram,
            spanning_trajectories,
        })
    }
}

/// (start, end) of every rollout on an executor.
fn executor_intervals(log: &EventLog, total_time: f64) -> Vec<(f64, f64)> {
    let mut open: BTreeMap<u64, f64> = BTreeMap::new();
    let mut out = Vec::new();
    for e in log.events() {
        match e.event.as_str() {
            "dispatch" => {
                if let Some(task) = e.u64("task") {
                    open.insert(task, e.time);
                }
            }
            "complete" => {
                if let Some(start) = e.u64("task").and_then(|t| open.remove(&t)) {
                    out.push((start, e.time));
                }
            }
            _ => {}
        }
    }
    out.extend(open.into_values().map(|s| (s, total_time)));
    out
}

fn trainer_intervals(log: &EventLog, total_time: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = None;
    for e in log.events() {
        match e.event.as_str() {
            "train_start" => start = Some(e.time),
            "publish" => {
                if let Some(s) = start.take() {
                    out.push((s, e.time));
                }
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, total_time));
    }
    out
}

fn busy_fraction(intervals: &[(f64, f64)], from: f64, to: f64, lanes: usize) -> f64 {
    let width = to - from;
    if width <= 0.0 {
        return 0.0;
    }
    let busy: f64 = intervals.iter().map(|&(s, e)| (e.min(to) - s.max(from)).max(0.0)).sum();
    (busy / (width * lanes as f64)).clamp(0.0, 1.0)
}

/// First instant at which an executor is idle and no task is left to hand
/// out, now or later.
fn drain_start(log: &EventLog, executors: usize) -> Option<f64> {
    let events = log.events();
    let mut running = 0usize;
    let mut ready = 0i64;
    let mut exhausted = false;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        while i < events.len() && events[i].time == t {
            match events[i].event.as_str() {
                "release" => ready += 1,
                "dispatch" => {
                    ready -= 1;
                    running += 1;
                }
                "complete" => running = running.saturating_sub(1),
                "workload_exhausted" => exhausted = true,
                _ => {}
            }
            i += 1;
        }
        if exhausted && ready == 0 && running < executors {
            return Some(t);
        }
    }
    None
}

/// Busy fraction per fixed-width window, as CSV.
pub fn busy_fraction_csv(log: &EventLog, window: f64) -> String {
    let config_executors =
        log.of_kind("config").next().and_then(|c| c.u64("executors")).unwrap_or(1).max(1) as usize;
    let total_time = log.events().iter().map(|e| e.time).fold(0.0, f64::max);
    let executors = executor_intervals(log, total_time);
    let trainer = trainer_intervals(log, total_time);
    let mut out = String::from("window_start,window_end,executor_busy_fraction,trainer_busy_fraction\n");
    if window <= 0.0 || total_time <= 0.0 {
        return out;
    }
    let mut start = 0.0;
    while start < total_time {
        let end = (start + window).min(total_time);
        let _ = writeln!(
            out,
            "{start:.3},{end:.3},{:.6},{:.6}",
            busy_fraction(&executors, start, end, config_executors),
            busy_fraction(&trainer, start, end, 1)
        );
        start += window;
    }
    out
}
