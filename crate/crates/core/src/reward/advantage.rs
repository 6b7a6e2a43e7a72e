use serde::{Deserialize, Serialize};

use super::RewardError;
use crate::trajectory::Trajectory;

pub const ADVANTAGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageNorm {
    #[default]
    Std,
    MeanOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advantages {
    pub values: Vec<f64>,
    /// Zero reward variance; the group carries no learning signal.
    pub degenerate: bool,
}

/// True when every reward in the group is identical.
pub fn is_degenerate(rewards: &[f64]) -> bool {
    let max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rewards.iter().copied().fold(f64::INFINITY, f64::min);
    max == min
}

pub fn group_advantages(rewards: &[f64]) -> Result<Advantages, RewardError> {
    group_advantages_with(rewards, AdvantageNorm::Std)
}

pub fn group_advantages_with(rewards: &[f64], norm: AdvantageNorm) -> Result<Advantages, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let centered: Vec<f64> = rewards.iter().map(|r| r - mean).collect();
    let degenerate = is_degenerate(rewards);
    let values = match norm {
        AdvantageNorm::MeanOnly => centered,
        AdvantageNorm::Std => {
            let var = centered.iter().map(|c| c * c).sum::<f64>() / n;
            let denom = var.sqrt().max(ADVANTAGE_EPS);
            centered.iter().map(|c| c / denom).collect()
        }
    };
    let values = if degenerate { vec![0.0; rewards.len()] } else { values };
    Ok(Advantages { values, degenerate })
}

/// All rollouts of one question together with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupBatch {
    pub qa_id: String,
    pub trajectories: Vec<Trajectory>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub retained: bool,
}

impl GroupBatch {
    pub fn new(qa_id: impl Into<String>, trajectories: Vec<Trajectory>, rewards: Vec<f64>) -> Result<Self, RewardError> {
        Self::with_norm(qa_id, trajectories, rewards, AdvantageNorm::Std)
    }

    pub fn with_norm(
        qa_id: impl Into<String>,
        mut trajectories: Vec<Trajectory>,
        rewards: Vec<f64>,
        norm: AdvantageNorm,
    ) -> Result<Self, RewardError> {
        if trajectories.len() != rewards.len() {
            return Err(RewardError::LengthMismatch { rewards: rewards.len(), trajectories: trajectories.len() });
        }
        let adv = group_advantages_with(&rewards, norm)?;
        for (t, a) in trajectories.iter_mut().zip(&adv.values) {
            t.advantage = Some(*a);
        }
        Ok(GroupBatch { qa_id: qa_id.into(), trajectories, rewards, advantages: adv.values, retained: !adv.degenerate })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Drops groups whose rewards are all identical, preserving order.
pub fn dynamic_filter(groups: Vec<GroupBatch>) -> Vec<GroupBatch> {
    groups
        .into_iter()
        .filter_map(|mut g| {
            g.retained = !is_degenerate(&g.rewards);
            g.retained.then_some(g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_group() {
        let a = group_advantages(&[1.0, 0.0]).unwrap();
        assert!((a.values[0] - 1.0).abs() < 1e-9);
        assert!((a.values[1] + 1.0).abs() < 1e-9);
        assert!(!a.degenerate);
    }

    #[test]
    fn constant_group_is_degenerate() {
        let a = group_advantages(&[0.3; 4]).unwrap();
        assert!(a.degenerate);
        assert!(a.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn singleton_rejected() {
        assert_eq!(group_advantages(&[1.0]), Err(RewardError::GroupTooSmall(1)));
    }

    #[test]
    fn mean_only_switch() {
        let a = group_advantages_with(&[1.0, 0.0, 0.0, 0.0], AdvantageNorm::MeanOnly).unwrap();
        assert!((a.values[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn filter_keeps_order() {
        let mk = |id: &str, r: Vec<f64>| GroupBatch {
            qa_id: id.into(),
            trajectories: vec![],
            advantages: vec![0.0; r.len()],
            rewards: r,
            retained: true,
        };
        let out = dynamic_filter(vec![mk("a", vec![1.0, 0.0]), mk("b", vec![1.0; 4]), mk("c", vec![0.0, 1.0, 0.0, 1.0])]);
        let ids: Vec<_> = out.iter().map(|g| g.qa_id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert!(dynamic_filter(vec![]).is_empty());
    }
}
