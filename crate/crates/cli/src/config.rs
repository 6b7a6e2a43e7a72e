//! Command settings: TOML file sections overlaid by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::CliError;

/// Copies every field that the flags left unset from the file settings.
macro_rules! overlay {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            pub fn overlay(self, file: $ty) -> $ty {
                $ty { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub questions: Option<usize>,
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub distractor_facts: Option<usize>,
    #[arg(long)]
    pub filler_sentences: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus JSON to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSONL of the corpus questions.
    #[arg(long)]
    pub qa_out: Option<PathBuf>,
}
overlay!(GenCorpusArgs { questions, hops, distractor_facts, filler_sentences, seed, out, qa_out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// sync, one-step-off or async.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub executors: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Total rollouts; a multiple of the group size.
    #[arg(long)]
    pub tasks: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub latency_sigma: Option<f64>,
    /// Median generation latency in seconds.
    #[arg(long)]
    pub latency_median: Option<f64>,
    #[arg(long)]
    pub tool_sigma: Option<f64>,
    #[arg(long)]
    pub tool_median: Option<f64>,
    #[arg(long)]
    pub train_step_time: Option<f64>,
    #[arg(long)]
    pub max_staleness: Option<u64>,
    /// Per-turn answer probability of the scripted policy.
    #[arg(long)]
    pub answer_prob: Option<f64>,
    #[arg(long)]
    pub turn_limit: Option<usize>,
    /// Corpus JSON; generated from the seed when absent.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Report path; events.jsonl and busy_fraction.csv go next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Busy-fraction window in simulated seconds.
    #[arg(long)]
    pub window: Option<f64>,
}
overlay!(SimulateArgs {
    mode, executors, batch_size, group_size, tasks, seed, latency_sigma, latency_median, tool_sigma,
    tool_median, train_step_time, max_staleness, answer_prob, turn_limit, corpus, out, window,
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainToyArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub clip_eps: Option<f64>,
    #[arg(long)]
    pub answer_bias: Option<f64>,
    #[arg(long)]
    pub max_staleness: Option<u64>,
    #[arg(long)]
    pub executors: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub turn_limit: Option<usize>,
    #[arg(long)]
    pub train_step_time: Option<f64>,
    /// Consecutive filtered trajectories before exiting with code 4.
    #[arg(long)]
    pub degenerate_after: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
overlay!(TrainToyArgs {
    corpus, seed, steps, learning_rate, clip_eps, answer_bias, max_staleness, executors, batch_size,
    group_size, turn_limit, train_step_time, degenerate_after, out_dir,
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeArgs {
    /// Seed questions as JSONL {id, question, answer}; corpus questions when absent.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// World used as fact source, judge and closed-book answerer.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub attempts: Option<usize>,
    #[arg(long)]
    pub max_accuracy: Option<f64>,
    /// Closed-book recall of the mock answerer.
    #[arg(long)]
    pub recall: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(SynthesizeArgs { seeds, corpus, seed, max_rounds, keep, attempts, max_accuracy, recall, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Eval questions as JSONL; corpus questions when absent.
    #[arg(long)]
    pub eval_set: Option<PathBuf>,
    /// Toy policy snapshot written by train-toy.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Scripted policy instead of a snapshot: oracle, eager, random or silent.
    #[arg(long)]
    pub script: Option<String>,
    #[arg(long)]
    pub answer_prob: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Minimum-turn settings to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub min_turns: Option<Vec<usize>>,
    #[arg(long)]
    pub turn_limit: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
overlay!(EvalArgs { corpus, eval_set, policy, script, answer_prob, k, min_turns, turn_limit, seed, out_dir });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// Event log written by simulate or train-toy.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<f64>,
}
overlay!(ReportArgs { events, out, csv, window });

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub gen_corpus: GenCorpusArgs,
    pub simulate: SimulateArgs,
    pub train_toy: TrainToyArgs,
    pub synthesize: SynthesizeArgs,
    pub eval: EvalArgs,
    pub report: ReportArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }
}

/// Fails unless `path` exists.
pub fn existing(path: &Option<PathBuf>, what: &str) -> Result<Option<PathBuf>, CliError> {
    match path {
        Some(p) if !p.exists() => Err(CliError::Config(format!("{what} {} does not exist", p.display()))),
        other => Ok(other.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = FileConfig::parse("[simulate]\nmode = \"sync\"\nseed = 3\nexecutors = 4\n").unwrap();
        let flags = SimulateArgs { mode: Some("async".into()), ..SimulateArgs::default() };
        let merged = flags.overlay(file.simulate);
        assert_eq!(merged.mode.as_deref(), Some("async"));
        assert_eq!(merged.seed, Some(3));
        assert_eq!(merged.executors, Some(4));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::parse("[simulate]\nmood = \"sync\"\n").is_err());
    }

    #[test]
    fn min_turns_list_from_file() {
        let file = FileConfig::parse("[eval]\nmin_turns = [0, 2, 4]\n").unwrap();
        assert_eq!(file.eval.min_turns, Some(vec![0, 2, 4]));
    }
}
