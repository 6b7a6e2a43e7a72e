use super::{GrpoError, TokenSample, ToyPolicy};
use crate::reward::GroupBatch;

pub const DEFAULT_CLIP_EPS: f64 = 0.2;

/// A sampled sequence with its behavior log-probabilities and advantage.
#[derive(Debug, Clone)]
pub struct Sequence<'a> {
    pub tokens: Vec<&'a TokenSample>,
    /// Behavior log-probability of each token, aligned with `tokens`.
    pub old_logprobs: Vec<f64>,
    pub advantage: f64,
}

impl<'a> Sequence<'a> {
    /// Uses the log-probabilities recorded at sampling time.
    pub fn recorded(tokens: Vec<&'a TokenSample>, advantage: f64) -> Self {
        let old_logprobs = tokens.iter().map(|t| t.logprob).collect();
        Self { tokens, old_logprobs, advantage }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub tokens: usize,
    pub clipped_tokens: usize,
}

/// Token-normalized clipped surrogate, negated so that descent on `loss`
/// ascends the objective. `clip_eps = None` gives the unclipped surrogate.
pub fn surrogate_loss(policy: &ToyPolicy, sequences: &[Sequence<'_>], clip_eps: Option<f64>) -> Result<LossOutput, GrpoError> {
    if sequences.is_empty() {
        return Err(GrpoError::EmptyBatch);
    }
    let g = sequences.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; policy.params().len()];
    let mut tokens = 0;
    let mut clipped_tokens = 0;
    for seq in sequences {
        if seq.tokens.len() != seq.old_logprobs.len() {
            return Err(GrpoError::Shape { expected: seq.tokens.len(), actual: seq.old_logprobs.len() });
        }
        if seq.tokens.is_empty() {
            continue;
        }
        let weight = 1.0 / (g * seq.tokens.len() as f64);
        let adv = seq.advantage;
        for (tok, &old) in seq.tokens.iter().zip(&seq.old_logprobs) {
            let new = policy.logprob(&tok.state, tok.action)?;
            if !new.is_finite() || !old.is_finite() {
                return Err(GrpoError::NonFiniteLoss);
            }
            let ratio = (new - old).exp();
            let unclipped = ratio * adv;
            let term = match clip_eps {
                Some(eps) => {
                    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
                    if unclipped <= clipped {
                        Some(unclipped)
                    } else {
                        clipped_tokens += 1;
                        loss -= weight * clipped;
                        None
                    }
                }
                None => Some(unclipped),
            };
            tokens += 1;
            if let Some(value) = term {
                loss -= weight * value;
                let dlogp = policy.grad_logprob(&tok.state, tok.action)?;
                let scale = -weight * adv * ratio;
                for (gi, d) in grad.iter_mut().zip(dlogp) {
                    *gi += scale * d;
                }
            }
        }
    }
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(GrpoError::NonFiniteLoss);
    }
    Ok(LossOutput { loss, grad, tokens, clipped_tokens })
}

/// Clipped loss over the trajectories stored in a group; the behavior
/// log-probabilities are re-evaluated under `old`.
pub fn grpo_loss(policy: &ToyPolicy, old: &ToyPolicy, group: &GroupBatch, clip_eps: f64) -> Result<(f64, Vec<f64>), GrpoError> {
    let mut sequences = Vec::with_capacity(group.trajectories.len());
    for (traj, adv) in group.trajectories.iter().zip(&group.advantages) {
        let tokens = traj.tokens();
        let old_logprobs = tokens.iter().map(|t| old.logprob(&t.state, t.action)).collect::<Result<Vec<_>, _>>()?;
        sequences.push(Sequence { tokens, old_logprobs, advantage: *adv });
    }
    let out = surrogate_loss(policy, &sequences, Some(clip_eps))?;
    Ok((out.loss, out.grad))
}
