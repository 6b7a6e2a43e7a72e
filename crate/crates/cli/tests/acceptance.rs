//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Set `SEARCHRL_UPDATE_GOLDEN=1` to rewrite the scheduler golden file.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use searchrl::agent::{ActionKind, AgentAction, Generation, GenerationClient, GenerationError, GenerationRequest};
use searchrl::grpo::{grpo_loss, ToyPolicy, DEFAULT_CLIP_EPS};
use searchrl::reward::{dynamic_filter, f1_score, group_advantages, ExactMatchJudge, GroupBatch};
use searchrl::rng::rng_for;
use searchrl::scheduler::{staleness_audit, work_conservation, SchedulerMode};
use searchrl::sim::{generate_corpus, Corpus, CorpusSpec, LogNormalParams};
use searchrl::synthesis::{
    filter_opensource, fuzz, synthesize, RuleJudge, ScriptedFactSource, SourceFact, SynthesisConfig,
};
use searchrl::train::{run_simulation, train_toy, SimulationSpec, ToyTrainingSpec};
use searchrl::{QaItem, SynthKind, Trajectory, Turn};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_for(101, "acceptance/fd", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (policy, old, group) = common::random_grpo_instance(&mut rng);
        let (_, grad) = grpo_loss(&policy, &old, &group, DEFAULT_CLIP_EPS).map_err(|e| e.to_string())?;
        let (na, nf) = (policy.n_actions(), policy.n_features());
        let fd = common::finite_difference(policy.params(), 1e-5, |p| {
            let probe = ToyPolicy::from_params(na, nf, p.to_vec()).expect("same shape");
            grpo_loss(&probe, &old, &group, DEFAULT_CLIP_EPS).expect("finite").0
        });
        worst = worst.max(common::relative_error(&grad, &fd));
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-5 && secs < 10.0, format!("max relative error {worst:.2e} over 100 instances in {secs:.2}s"))
}

fn advantage_properties() -> Outcome {
    let mut rng = rng_for(102, "acceptance/adv", 0);
    let mut failures = 0;
    for _ in 0..1000 {
        let g = rng.random_range(2..=16);
        let rewards: Vec<f64> = (0..g).map(|_| rng.random_range(-5.0..5.0)).collect();
        let base = group_advantages(&rewards).map_err(|e| e.to_string())?;
        let mean = base.values.iter().sum::<f64>() / g as f64;
        let (shift, scale) = (rng.random_range(-10.0..10.0), rng.random_range(0.1..10.0));
        let moved: Vec<f64> = rewards.iter().map(|r| r * scale + shift).collect();
        let other = group_advantages(&moved).map_err(|e| e.to_string())?;
        let invariant = base.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= 1e-6);
        let (_, old, group) = common::random_grpo_instance(&mut rng);
        let (loss, _) = grpo_loss(&old, &old, &group, DEFAULT_CLIP_EPS).map_err(|e| e.to_string())?;
        if mean.abs() > 1e-9 || !invariant || loss.abs() > 1e-9 {
            failures += 1;
        }
    }
    check(failures == 0, format!("{failures} failing trials of 1000"))
}

fn dynamic_filtering() -> Outcome {
    let mut rng = rng_for(103, "acceptance/filter", 0);
    let mut violations = 0;
    let mut dropped = 0;
    for _ in 0..10_000 {
        let g = rng.random_range(2..=8);
        let levels = [0.0, 0.5, 1.0];
        let spread = rng.random_range(1..=3);
        let rewards: Vec<f64> = (0..g).map(|_| levels[rng.random_range(0..spread)]).collect();
        let trajs = rewards.iter().map(|_| common::token_trajectory("q", Vec::new())).collect();
        let group = GroupBatch::new("q", trajs, rewards.clone()).map_err(|e| e.to_string())?;
        let flat = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            == rewards.iter().copied().fold(f64::INFINITY, f64::min);
        let gone = dynamic_filter(vec![group]).is_empty();
        dropped += usize::from(gone);
        violations += usize::from(gone != flat);
    }
    check(violations == 0, format!("{violations} violations, {dropped} of 10000 groups dropped"))
}

fn random_text(rng: &mut impl Rng) -> String {
    const WORDS: &[&str] =
        &["the", "A", "an", "Paris", "paris,", "city", "of", "x", "Big", "big", "N.Y.", "42", "-", "café", "Kesh!"];
    let n = rng.random_range(0..7);
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

fn f1_equivalence() -> Outcome {
    let mut rng = rng_for(104, "acceptance/f1", 0);
    let mismatches = (0..1000)
        .filter(|_| {
            let (a, b) = (random_text(&mut rng), random_text(&mut rng));
            f1_score(&a, &b) != common::f1_oracle(&a, &b)
        })
        .count();
    check(mismatches == 0, format!("{mismatches} mismatches over 1000 pairs"))
}

const GOLDEN_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ModeFigures {
    executor_busy_fraction: f64,
    throughput: f64,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Golden {
    seed: u64,
    generate_sigma: f64,
    tasks: usize,
    executors: usize,
    batch_size: usize,
    group_size: usize,
    async_min_busy: f64,
    sync_max_busy: f64,
    modes: BTreeMap<String, ModeFigures>,
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/scheduler_ordering.json")
}

fn scheduler_ordering() -> Outcome {
    let start = Instant::now();
    let corpus = Arc::new(generate_corpus(&CorpusSpec { seed: GOLDEN_SEED, ..CorpusSpec::default() }).map_err(|e| e.to_string())?);
    let mut modes = BTreeMap::new();
    for mode in [SchedulerMode::Sync, SchedulerMode::OneStepOff, SchedulerMode::FullyAsync { max_staleness: 4 }] {
        let mut spec = SimulationSpec::new(mode, GOLDEN_SEED);
        spec.latency.generate = LogNormalParams::with_median(4.0, 1.5);
        (spec.tasks, spec.executors, spec.batch_size, spec.group_size) = (64, 8, 16, 4);
        let r = run_simulation(&spec, Arc::clone(&corpus)).map_err(|e| e.to_string())?.report;
        modes.insert(mode.name().to_owned(), ModeFigures { executor_busy_fraction: r.executor_busy_fraction, throughput: r.throughput });
    }
    let secs = start.elapsed().as_secs_f64();
    let fresh = Golden {
        seed: GOLDEN_SEED,
        generate_sigma: 1.5,
        tasks: 64,
        executors: 8,
        batch_size: 16,
        group_size: 4,
        async_min_busy: 0.95,
        sync_max_busy: 0.80,
        modes,
    };
    if std::env::var_os("SEARCHRL_UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), serde_json::to_string_pretty(&fresh).expect("serializable") + "\n")
            .map_err(|e| e.to_string())?;
    }
    let golden: Golden = serde_json::from_str(&std::fs::read_to_string(golden_path()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let matches = golden.modes.iter().all(|(name, g)| {
        fresh.modes.get(name).is_some_and(|f| {
            (f.executor_busy_fraction - g.executor_busy_fraction).abs() <= 1e-9 && (f.throughput - g.throughput).abs() <= 1e-6
        })
    });
    let [a, o, s] = ["async", "one-step-off", "sync"].map(|m| fresh.modes[m]);
    let ordered = a.executor_busy_fraction >= o.executor_busy_fraction
        && o.executor_busy_fraction >= s.executor_busy_fraction
        && a.throughput >= o.throughput
        && o.throughput >= s.throughput;
    let thresholds = a.executor_busy_fraction >= golden.async_min_busy && s.executor_busy_fraction <= golden.sync_max_busy;
    check(
        matches && ordered && thresholds && secs < 10.0,
        format!(
            "busy async {:.3} / one-step-off {:.3} / sync {:.3}, throughput {:.1} / {:.1} / {:.1}, golden match {matches}, {secs:.2}s",
            a.executor_busy_fraction, o.executor_busy_fraction, s.executor_busy_fraction, a.throughput, o.throughput, s.throughput
        ),
    )
}

fn work_conservation_audit() -> Outcome {
    let mut violations = 0;
    for seed in 0..20 {
        let corpus = Arc::new(generate_corpus(&CorpusSpec { seed, ..CorpusSpec::default() }).map_err(|e| e.to_string())?);
        let spec = SimulationSpec::new(SchedulerMode::FullyAsync { max_staleness: 4 }, seed);
        let log = run_simulation(&spec, corpus).map_err(|e| e.to_string())?.log;
        violations += work_conservation(&log).len();
    }
    check(violations == 0, format!("{violations} idle-while-runnable instants over 20 seeds"))
}

fn staleness() -> Outcome {
    let (mut violations, mut trained, mut spanning) = (0, 0, 0);
    for seed in 0..20 {
        let corpus = Arc::new(generate_corpus(&CorpusSpec { seed, ..CorpusSpec::default() }).map_err(|e| e.to_string())?);
        for mode in [SchedulerMode::Sync, SchedulerMode::OneStepOff, SchedulerMode::FullyAsync { max_staleness: 4 }] {
            let out = run_simulation(&SimulationSpec::new(mode, seed), Arc::clone(&corpus)).map_err(|e| e.to_string())?;
            violations += staleness_audit(&out.log).len();
            trained += out.report.trajectories_trained;
            if mode.is_async() {
                spanning += out.report.spanning_trajectories;
            }
        }
    }
    check(
        violations == 0 && spanning > 0,
        format!("{violations} bound violations over {trained} trained trajectories, {spanning} async trajectories span versions"),
    )
}

fn toy_training() -> Outcome {
    let corpus = Arc::new(generate_corpus(&CorpusSpec { questions: 20, hops: 2, ..CorpusSpec::default() }).map_err(|e| e.to_string())?);
    let out = train_toy(&ToyTrainingSpec::new(0), corpus).map_err(|e| e.to_string())?;
    let gain = out.final_reward - out.initial_reward;
    check(
        out.report.train_steps == 200 && gain >= 0.3 && out.final_tool_calls > out.initial_tool_calls,
        format!(
            "reward {:.3} -> {:.3}, tool calls {:.2} -> {:.2} over {} steps",
            out.initial_reward, out.final_reward, out.initial_tool_calls, out.final_tool_calls, out.report.train_steps
        ),
    )
}

struct Says(&'static str);

impl GenerationClient for Says {
    fn generate(&self, _request: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        Ok(Generation { text: format!("<answer>{}</answer>", self.0), model_version: 0, tokens: Vec::new() })
    }
}

fn source_fact(entity: &str, descriptor: &str) -> SourceFact {
    SourceFact {
        entity: entity.into(),
        statement: format!("{entity} is {descriptor}."),
        descriptor: descriptor.into(),
        source: "scripted".into(),
    }
}

fn rollout(searches: usize, answer: &str) -> Trajectory {
    let mut traj = common::token_trajectory("q", Vec::new());
    let template = traj.turns.pop().expect("one turn");
    for i in 0..searches {
        let action = AgentAction { kind: ActionKind::Search, payload: "x".into(), thought: String::new() };
        traj.turns.push(Turn { index: i, action, ..template.clone() });
    }
    traj.turns.push(Turn { index: searches, action: AgentAction::answer(answer), ..template });
    traj.final_answer = Some(answer.into());
    traj
}

fn synthesis_pipeline() -> Outcome {
    let source = ScriptedFactSource::new(vec![
        source_fact("Alpha", "the founder of Beta"),
        source_fact("Beta", "the mayor of Gamma"),
        source_fact("Gamma", "the patron of Delta"),
        source_fact("Delta", "the rival of Epsilon"),
        source_fact("Epsilon", "the heir of Zeta"),
        source_fact("Zeta", "the keeper of the old mill"),
    ]);
    let seeds = [
        QaItem::new("s1", "In 1901 and 1932 and 1957, what did Alpha build?", "Omega"),
        QaItem::new("s2", "Which bridge did Gamma open in 1890?", "Tarn"),
        QaItem::new("s3", "Who succeeded Delta at the Catskill Mountain Railroad?", "Mira"),
    ];
    let cfg = SynthesisConfig::default();
    let (mut emitted, mut bad) = (0, 0);
    for seed in &seeds {
        for lrm in [Says("nobody"), Says("Omega")] {
            let out = synthesize(seed, &cfg, &source, &RuleJudge::approving(), &lrm).map_err(|e| e.to_string())?;
            for kept in out.kept {
                emitted += 1;
                let item = &kept.item;
                let fine = kept.verification.passed
                    && item.ledger.len() == item.count(SynthKind::Injection)
                    && item.answer == seed.answer;
                bad += usize::from(!fine);
            }
        }
        let mut current = seed.clone();
        while let Ok(next) = fuzz(&current) {
            bad += usize::from(next.answer != seed.answer || next.ledger.len() != current.ledger.len());
            current = next;
        }
    }

    let qa = QaItem::new("q", "q?", "Kesh");
    let mut table_errors = 0;
    for correct in 0..=16 {
        for searches in 0..=5 {
            let rollouts: Vec<Trajectory> = (0..16)
                .map(|i| if i < correct { rollout(searches, "Kesh") } else { rollout(5, "Moro") })
                .collect();
            let expected = correct > 0 && correct * 2 < 16 && searches >= 2;
            let verdict = filter_opensource(&qa, &rollouts, &ExactMatchJudge).map_err(|e| e.to_string())?;
            table_errors += usize::from(verdict.keep != expected);
        }
    }
    check(
        emitted > 0 && bad == 0 && table_errors == 0,
        format!("{emitted} emitted, {bad} bad items, {table_errors} truth-table mismatches over 102 cells"),
    )
}

fn min_turn_sweep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus: Corpus = generate_corpus(&CorpusSpec { questions: 20, hops: 2, seed: 5, ..CorpusSpec::default() })
        .map_err(|e| e.to_string())?;
    let corpus_path = dir.path().join("corpus.json");
    std::fs::write(&corpus_path, corpus.to_json()).map_err(|e| e.to_string())?;
    let out_dir = dir.path().join("eval");
    let status = Command::new(env!("CARGO_BIN_EXE_searchrl"))
        .args(["eval", "--script", "eager", "--answer-prob", "0.5", "--turn-limit", "8", "--k", "16"])
        .args(["--min-turns", "0,2,4", "--seed", "3", "--corpus"])
        .arg(&corpus_path)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let csv = std::fs::read_to_string(out_dir.join("min_turns.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<(usize, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().expect("min_turns"), cols[1].parse().expect("avg"))
        })
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].1 >= w[0].1);
    let close = rows.iter().all(|(m, avg)| (avg - common::eager_accuracy(2, 0.5, *m, 8)).abs() < 0.1);
    let curve: Vec<String> = rows
        .iter()
        .map(|(m, avg)| format!("{m}:{avg:.3} (exact {:.3})", common::eager_accuracy(2, 0.5, *m, 8)))
        .collect();
    check(rows.len() == 3 && monotone && close, format!("Avg@16 by min turns {}", curve.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient check", gradient_check),
        ("advantage properties", advantage_properties),
        ("dynamic filtering", dynamic_filtering),
        ("F1 oracle equivalence", f1_equivalence),
        ("scheduler ordering", scheduler_ordering),
        ("work conservation", work_conservation_audit),
        ("staleness bound", staleness),
        ("toy training", toy_training),
        ("synthesis pipeline", synthesis_pipeline),
        ("minimum-turn sweep", min_turn_sweep),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
