//! Invariant checks over a scheduler event log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::log::EventLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub time: f64,
    pub detail: String,
}

fn violation(check: &str, time: f64, detail: String) -> Violation {
    Violation { check: check.to_owned(), time, detail }
}

struct Config {
    mode: String,
    executors: u64,
    batch_size: u64,
    max_staleness: u64,
}

fn config(log: &EventLog) -> Option<Config> {
    let c = log.of_kind("config").next()?;
    Some(Config {
        mode: c.str("mode")?.to_owned(),
        executors: c.u64("executors")?,
        batch_size: c.u64("batch_size")?,
        max_staleness: c.u64("max_staleness")?,
    })
}

/// Fully asynchronous runs: no instant where an executor idles while a task
/// is ready or admission would allow releasing one.
pub fn work_conservation(log: &EventLog) -> Vec<Violation> {
    let Some(cfg) = config(log) else {
        return vec![violation("work_conservation", 0.0, "missing config event".into())];
    };
    if cfg.mode != "async" {
        return Vec::new();
    }
    let events = log.events();
    let mut out = Vec::new();
    let (mut running, mut ready, mut released, mut dropped, mut version) = (0u64, 0i64, 0u64, 0u64, 0u64);
    let mut exhausted = false;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        let mut stop = false;
        while i < events.len() && events[i].time == t {
            let e = &events[i];
            match e.event.as_str() {
                "release" => {
                    released += 1;
                    ready += 1;
                }
                "dispatch" => {
                    ready -= 1;
                    running += 1;
                }
                "complete" => running = running.saturating_sub(1),
                "filtered" => dropped += e.u64("size").unwrap_or(0),
                "stale_discard" => dropped += 1,
                "publish" => version = e.u64("version").unwrap_or(version),
                "workload_exhausted" => exhausted = true,
                "stop" | "degenerate" | "finish" => stop = true,
                _ => {}
            }
            i += 1;
        }
        if stop {
            break;
        }
        let idle = cfg.executors.saturating_sub(running);
        let capacity = (version + cfg.max_staleness + 1) * cfg.batch_size;
        let admissible = !exhausted && released - dropped < capacity;
        if idle > 0 && (ready > 0 || admissible) {
            out.push(violation(
                "work_conservation",
                t,
                format!("{idle} idle executors with {ready} ready tasks (admissible release: {admissible})"),
            ));
        }
    }
    out
}

/// (first generation time per batch, training-complete time per batch)
fn batch_times(log: &EventLog) -> (BTreeMap<u64, f64>, BTreeMap<u64, f64>) {
    let mut first_gen = BTreeMap::new();
    let mut trained = BTreeMap::new();
    for e in log.events() {
        let Some(batch) = e.u64("batch") else { continue };
        match e.event.as_str() {
            "turn" | "dispatch" => {
                first_gen.entry(batch).or_insert(e.time);
            }
            "publish" | "train_skipped" => {
                trained.entry(batch).or_insert(e.time);
            }
            _ => {}
        }
    }
    (first_gen, trained)
}

fn barrier_check(log: &EventLog, check: &str, lag: u64) -> Vec<Violation> {
    let (first_gen, trained) = batch_times(log);
    let mut out = Vec::new();
    for (&batch, &start) in first_gen.range(lag..) {
        let prior = batch - lag;
        match trained.get(&prior) {
            Some(&done) if start >= done => {}
            Some(&done) => out.push(violation(
                check,
                start,
                format!("batch {batch} generated at {start:.3} before batch {prior} finished training at {done:.3}"),
            )),
            None => out.push(violation(
                check,
                start,
                format!("batch {batch} generated while batch {prior} was never trained"),
            )),
        }
    }
    out
}

/// Synchronous runs: batch N+1 generation starts after batch N is trained.
pub fn sync_barrier(log: &EventLog) -> Vec<Violation> {
    match config(log) {
        Some(c) if c.mode == "sync" => barrier_check(log, "sync_barrier", 1),
        _ => Vec::new(),
    }
}

/// One-step-off runs: batch N+2 generation starts after batch N is trained.
pub fn one_step_overlap(log: &EventLog) -> Vec<Violation> {
    match config(log) {
        Some(c) if c.mode == "one-step-off" => barrier_check(log, "one_step_overlap", 2),
        _ => Vec::new(),
    }
}

/// Every trajectory consumed by training is within the mode's version gap.
pub fn staleness_audit(log: &EventLog) -> Vec<Violation> {
    let Some(cfg) = config(log) else {
        return vec![violation("staleness", 0.0, "missing config event".into())];
    };
    let mut out = Vec::new();
    for e in log.of_kind("train_start") {
        let tasks = e.u64_list("tasks");
        for (i, gap) in e.u64_list("gaps").into_iter().enumerate() {
            if gap > cfg.max_staleness {
                out.push(violation(
                    "staleness",
                    e.time,
                    format!("task {:?} trained with gap {gap} > {}", tasks.get(i), cfg.max_staleness),
                ));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mode: String,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn audit_all(log: &EventLog) -> AuditReport {
    let mode = config(log).map_or_else(|| "unknown".to_owned(), |c| c.mode);
    let mut violations = work_conservation(log);
    violations.extend(sync_barrier(log));
    violations.extend(one_step_overlap(log));
    violations.extend(staleness_audit(log));
    AuditReport { mode, violations }
}
