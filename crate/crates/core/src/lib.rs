//! Asynchronous agentic RL for long-horizon search agents: agent runtime,
//! synthetic search world, rewards and GRPO, rollout scheduling, QA
//! synthesis and evaluation.

pub mod agent;
pub mod eval;
pub mod grpo;
pub mod qa;
pub mod reward;
pub mod rng;
pub mod scheduler;
pub mod sim;
pub mod synthesis;
pub mod text;
pub mod train;
pub mod trajectory;
pub mod weights;

pub use qa::{Fact, FactLedger, QaItem, SynthAction, SynthKind};
pub use trajectory::{Trajectory, TrajectoryLog, Turn};
