//! Command implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use searchrl::agent::{AgentMode, BudgetConfig, GenerationClient};
use searchrl::eval::{evaluate, sweep_csv, EvalConfig, EvalError, EvalReport, SweepPoint, DEFAULT_K};
use searchrl::grpo::toy::{ToyAgent, N_ACTIONS, N_FEATURES};
use searchrl::grpo::ToyPolicy;
use searchrl::qa::QaItem;
use searchrl::reward::ExactMatchJudge;
use searchrl::scheduler::{audit_all, busy_fraction_csv, EventLog, SchedulerMode, UtilizationReport, WeightStore};
use searchrl::sim::{generate_corpus, Corpus, CorpusSpec, LatencyModel, LogNormalParams, PolicyScript, ScriptedGenerator};
use searchrl::synthesis::{synthesize as run_synthesis, CorpusFactSource, CorpusJudge, RecallLrm, SynthesisConfig};
use searchrl::train::{run_simulation, train_toy as run_train_toy, SimulationSpec, ToyTrainingSpec};

use crate::config::{existing, EvalArgs, GenCorpusArgs, ReportArgs, SimulateArgs, SynthesizeArgs, TrainToyArgs};
use crate::CliError;

const DEFAULT_WINDOW: f64 = 60.0;
const DEFAULT_RECALL: f64 = 0.9;
const TOY_TURN_LIMIT: usize = 8;

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map_or_else(|| PathBuf::from(name), |dir| dir.join(name))
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Config(format!("{command} requires --seed (flag or config)")))
}

fn load_corpus(path: Option<PathBuf>, seed: u64) -> Result<Arc<Corpus>, CliError> {
    let corpus = match existing(&path, "corpus")? {
        Some(p) => Corpus::load(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => generate_corpus(&CorpusSpec { seed, ..CorpusSpec::default() })
            .map_err(|e| CliError::Failed(e.to_string()))?,
    };
    Ok(Arc::new(corpus))
}

/// Questions from a JSONL file; ledger and lineage are optional.
fn load_questions(path: &Path) -> Result<Vec<QaItem>, CliError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| CliError::Config(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("serializable") + "\n").collect()
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

pub fn gen_corpus(args: GenCorpusArgs) -> Result<(), CliError> {
    let defaults = CorpusSpec::default();
    let spec = CorpusSpec {
        questions: args.questions.unwrap_or(defaults.questions),
        hops: args.hops.unwrap_or(defaults.hops),
        distractor_facts: args.distractor_facts.unwrap_or(defaults.distractor_facts),
        filler_sentences: args.filler_sentences.unwrap_or(defaults.filler_sentences),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    let corpus = generate_corpus(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("corpus.json"));
    write(&out, &corpus.to_json())?;
    if let Some(qa_out) = args.qa_out {
        write(&qa_out, &to_jsonl(&corpus.qa_items()))?;
    }
    println!("wrote {} questions, {} pages to {}", spec.questions, corpus.pages().count(), out.display());
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let seed = require_seed(args.seed, "simulate")?;
    let mut mode: SchedulerMode = args.mode.as_deref().unwrap_or("async").parse()?;
    if let (SchedulerMode::FullyAsync { .. }, Some(s)) = (mode, args.max_staleness) {
        mode = SchedulerMode::FullyAsync { max_staleness: s };
    }
    let mut spec = SimulationSpec::new(mode, seed);
    let latency = LatencyModel::default();
    let generate = LogNormalParams::with_median(
        args.latency_median.unwrap_or(latency.generate.mu.exp()),
        args.latency_sigma.unwrap_or(latency.generate.sigma),
    );
    let tool = LogNormalParams::with_median(
        args.tool_median.unwrap_or(latency.tool.mu.exp()),
        args.tool_sigma.unwrap_or(latency.tool.sigma),
    );
    spec.latency = LatencyModel { generate, tool, seed };
    spec.executors = args.executors.unwrap_or(spec.executors);
    spec.batch_size = args.batch_size.unwrap_or(spec.batch_size);
    spec.group_size = args.group_size.unwrap_or(spec.group_size);
    spec.tasks = args.tasks.unwrap_or(spec.tasks);
    spec.train_step_time = args.train_step_time.unwrap_or(spec.train_step_time);
    if let Some(p) = args.answer_prob {
        spec.policy = PolicyScript::EagerChain { answer_prob: p };
    }
    spec.budget.turn_limit = args.turn_limit.unwrap_or(spec.budget.turn_limit);
    spec.budget.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let window = args.window.unwrap_or(DEFAULT_WINDOW);
    if !(window > 0.0) {
        return Err(CliError::Config("window must be positive".into()));
    }
    let corpus = load_corpus(args.corpus, seed)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("report.json"));

    let outcome = run_simulation(&spec, corpus)?;
    write(&out, &outcome.report.to_json())?;
    write(&sibling(&out, "events.jsonl"), &outcome.log.to_jsonl())?;
    write(&sibling(&out, "busy_fraction.csv"), &busy_fraction_csv(&outcome.log, window))?;
    let r = &outcome.report;
    println!(
        "{}: busy {:.3}, trainer {:.3}, throughput {:.1}/h, {} trained, {} spanning versions",
        r.mode, r.executor_busy_fraction, r.trainer_busy_fraction, r.throughput, r.trajectories_trained,
        r.spanning_trajectories
    );
    Ok(())
}

pub fn train_toy(args: TrainToyArgs) -> Result<(), CliError> {
    let seed = require_seed(args.seed, "train-toy")?;
    let mut spec = ToyTrainingSpec::new(seed);
    spec.steps = args.steps.unwrap_or(spec.steps);
    spec.learning_rate = args.learning_rate.unwrap_or(spec.learning_rate);
    spec.clip_eps = args.clip_eps.unwrap_or(spec.clip_eps);
    spec.answer_bias = args.answer_bias.unwrap_or(spec.answer_bias);
    spec.max_staleness = args.max_staleness.unwrap_or(spec.max_staleness);
    spec.executors = args.executors.unwrap_or(spec.executors);
    spec.batch_size = args.batch_size.unwrap_or(spec.batch_size);
    spec.group_size = args.group_size.unwrap_or(spec.group_size);
    spec.budget.turn_limit = args.turn_limit.unwrap_or(spec.budget.turn_limit);
    spec.train_step_time = args.train_step_time.unwrap_or(spec.train_step_time);
    spec.degenerate_after = args.degenerate_after.or(spec.degenerate_after);
    spec.latency.seed = seed;
    if !(spec.learning_rate >= 0.0) || !(spec.clip_eps > 0.0) {
        return Err(CliError::Config("learning_rate must be >= 0 and clip_eps > 0".into()));
    }
    spec.budget.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let corpus = load_corpus(args.corpus, seed)?;
    let out_dir = args.out_dir.unwrap_or_else(|| PathBuf::from("train-toy"));

    let outcome = run_train_toy(&spec, corpus)?;
    write(&out_dir.join("reward_curve.csv"), &outcome.reward_csv())?;
    write(&out_dir.join("tool_calls_curve.csv"), &outcome.tool_call_csv())?;
    write(&out_dir.join("policy.json"), &pretty(&outcome.policy))?;
    write(&out_dir.join("report.json"), &outcome.report.to_json())?;
    write(&out_dir.join("events.jsonl"), &outcome.log.to_jsonl())?;
    write(&out_dir.join("train_stats.jsonl"), &to_jsonl(&outcome.stats))?;
    let summary = json!({
        "steps": outcome.report.train_steps,
        "final_version": outcome.report.final_version,
        "initial_reward": outcome.initial_reward,
        "final_reward": outcome.final_reward,
        "initial_tool_calls": outcome.initial_tool_calls,
        "final_tool_calls": outcome.final_tool_calls,
    });
    write(&out_dir.join("summary.json"), &pretty(&summary))?;
    println!(
        "reward {:.3} -> {:.3}, tool calls {:.2} -> {:.2} over {} steps",
        outcome.initial_reward,
        outcome.final_reward,
        outcome.initial_tool_calls,
        outcome.final_tool_calls,
        outcome.report.train_steps
    );
    Ok(())
}

pub fn synthesize(args: SynthesizeArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(0);
    let corpus = load_corpus(args.corpus, seed)?;
    let seeds = match existing(&args.seeds, "seeds")? {
        Some(path) => load_questions(&path)?,
        None => corpus.qa_items(),
    };
    let defaults = SynthesisConfig::default();
    let cfg = SynthesisConfig {
        max_rounds: args.max_rounds.unwrap_or(defaults.max_rounds),
        per_seed_keep: args.keep.unwrap_or(defaults.per_seed_keep),
        attempts: args.attempts.unwrap_or(defaults.attempts),
        max_accuracy: args.max_accuracy.unwrap_or(defaults.max_accuracy),
        ..defaults
    };
    if cfg.attempts == 0 {
        return Err(CliError::Config("attempts must be at least 1".into()));
    }
    let recall = args.recall.unwrap_or(DEFAULT_RECALL);
    if !(0.0..=1.0).contains(&recall) {
        return Err(CliError::Config("recall must lie in [0, 1]".into()));
    }
    let source = CorpusFactSource::new(Arc::clone(&corpus));
    let judge = CorpusJudge::new(&corpus);
    let lrm = RecallLrm::new(&corpus, recall);

    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(seeds.len().max(1));
    let chunk = seeds.len().div_ceil(threads).max(1);
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                let (source, judge, lrm, cfg) = (&source, &judge, &lrm, &cfg);
                scope.spawn(move || {
                    part.iter().map(|s| run_synthesis(s, cfg, source, judge, lrm)).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("synthesis thread panicked")).collect::<Vec<_>>()
    });

    let mut kept = Vec::new();
    let (mut verified, mut passed, mut quarantined, mut rejected) = (0, 0, 0, 0);
    for result in results {
        let outcome = result.map_err(|e| CliError::Failed(e.to_string()))?;
        verified += outcome.verified;
        passed += outcome.passed;
        quarantined += outcome.quarantined;
        rejected += usize::from(outcome.seed_rejected);
        kept.extend(outcome.kept);
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from("synthesized.jsonl"));
    write(&out, &to_jsonl(&kept))?;
    println!(
        "{} seeds ({} rejected): {} variants verified, {} passed, {} quarantined, {} kept",
        seeds.len(),
        rejected,
        verified,
        passed,
        quarantined,
        kept.len()
    );
    Ok(())
}

fn script_policy(name: &str, answer_prob: f64) -> Result<PolicyScript, CliError> {
    Ok(match name {
        "oracle" => PolicyScript::OracleChain,
        "eager" => PolicyScript::EagerChain { answer_prob },
        "random" => PolicyScript::RandomTagged { answer_prob },
        "silent" => PolicyScript::Silent,
        other => return Err(CliError::Config(format!("unknown script {other:?}"))),
    })
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Judge(_) => CliError::Failed(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

#[derive(Serialize)]
struct EvalSummary {
    min_turns: usize,
    k: usize,
    questions: usize,
    avg_at_k: f64,
    pass_at_k: f64,
    mean_f1: f64,
}

impl From<&EvalReport> for EvalSummary {
    fn from(r: &EvalReport) -> Self {
        Self {
            min_turns: r.min_turns,
            k: r.k,
            questions: r.questions,
            avg_at_k: r.avg_at_k,
            pass_at_k: r.pass_at_k,
            mean_f1: r.mean_f1,
        }
    }
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(0);
    let corpus = load_corpus(args.corpus, seed)?;
    let items = match existing(&args.eval_set, "eval set")? {
        Some(path) => load_questions(&path)?,
        None => corpus.qa_items(),
    };
    let answer_prob = args.answer_prob.unwrap_or(0.3);
    let (policy, default_limit): (Box<dyn GenerationClient>, usize) =
        match (existing(&args.policy, "policy")?, args.script.as_deref()) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either --policy or --script, not both".into())),
            (Some(path), None) => {
                let snapshot: ToyPolicy = serde_json::from_str(&fs::read_to_string(&path)?)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                if snapshot.n_actions() != N_ACTIONS || snapshot.n_features() != N_FEATURES {
                    return Err(CliError::Config("policy snapshot has the wrong shape".into()));
                }
                (Box::new(ToyAgent::new(Arc::new(WeightStore::new(snapshot)))), TOY_TURN_LIMIT)
            }
            (None, Some(name)) => (
                Box::new(ScriptedGenerator::new(Arc::clone(&corpus), script_policy(name, answer_prob)?)),
                BudgetConfig::base().turn_limit,
            ),
            (None, None) => return Err(CliError::Config("eval needs --policy or --script".into())),
        };
    let cfg = EvalConfig {
        k: args.k.unwrap_or(DEFAULT_K),
        mode: AgentMode::BaseLm,
        budget: BudgetConfig { turn_limit: args.turn_limit.unwrap_or(default_limit), ..BudgetConfig::base() },
        seed,
    };
    let sweep = args.min_turns.clone();
    let settings = sweep.clone().unwrap_or_else(|| vec![0]);
    let mut reports = Vec::new();
    for m in settings {
        let run = EvalConfig { budget: BudgetConfig { min_turns: m, ..cfg.budget }, ..cfg };
        reports.push(evaluate(&items, policy.as_ref(), corpus.as_ref(), &ExactMatchJudge, &run).map_err(eval_error)?);
    }

    let out_dir = args.out_dir.unwrap_or_else(|| PathBuf::from("eval"));
    let summaries: Vec<EvalSummary> = reports.iter().map(EvalSummary::from).collect();
    write(&out_dir.join("eval_report.json"), &pretty(&summaries))?;
    let records: Vec<_> = reports
        .iter()
        .flat_map(|r| r.records.iter().map(move |rec| json!({ "min_turns": r.min_turns, "record": rec })))
        .collect();
    write(&out_dir.join("records.jsonl"), &to_jsonl(&records))?;
    if sweep.is_some() {
        let points: Vec<SweepPoint> = reports.iter().map(SweepPoint::from_report).collect();
        write(&out_dir.join("min_turns.csv"), &sweep_csv(&points))?;
    }
    for s in &summaries {
        println!("min_turns {}: Avg@{} {:.4}, Pass@{} {:.4}", s.min_turns, s.k, s.avg_at_k, s.k, s.pass_at_k);
    }
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<(), CliError> {
    let events = existing(&args.events, "event log")?
        .ok_or_else(|| CliError::Config("report needs --events".into()))?;
    let log = EventLog::from_jsonl(&fs::read_to_string(&events)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", events.display())))?;
    let report = UtilizationReport::from_log(&log)?;
    let audit = audit_all(&log);
    let out = args.out.unwrap_or_else(|| PathBuf::from("report.json"));
    let csv = args.csv.unwrap_or_else(|| sibling(&out, "busy_fraction.csv"));
    write(&out, &report.to_json())?;
    write(&csv, &busy_fraction_csv(&log, args.window.unwrap_or(DEFAULT_WINDOW)))?;
    write(&sibling(&out, "audit.json"), &pretty(&audit))?;
    println!(
        "{}: busy {:.3}, throughput {:.1}/h, {} audit violations",
        report.mode,
        report.executor_busy_fraction,
        report.throughput,
        audit.violations.len()
    );
    Ok(())
}
