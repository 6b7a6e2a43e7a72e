use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::GrpoError;

/// Features and legal actions at one decision point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub features: Vec<f64>,
    pub allowed: Vec<bool>,
}

/// One sampled action with the behavior policy's log-probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSample {
    pub state: PolicyState,
    pub action: usize,
    pub logprob: f64,
}

/// Linear softmax policy: logit(a | s) = θ[a] · φ(s), masked to allowed actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    n_actions: usize,
    n_features: usize,
    params: Vec<f64>,
}

impl ToyPolicy {
    pub fn zeros(n_actions: usize, n_features: usize) -> Self {
        Self { n_actions, n_features, params: vec![0.0; n_actions * n_features] }
    }

    pub fn from_params(n_actions: usize, n_features: usize, params: Vec<f64>) -> Result<Self, GrpoError> {
        if params.len() != n_actions * n_features {
            return Err(GrpoError::Shape { expected: n_actions * n_features, actual: params.len() });
        }
        Ok(Self { n_actions, n_features, params })
    }

    pub fn random<R: Rng + ?Sized>(n_actions: usize, n_features: usize, scale: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, scale).expect("finite scale");
        let params = (0..n_actions * n_features).map(|_| normal.sample(rng)).collect();
        Self { n_actions, n_features, params }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn index(&self, action: usize, feature: usize) -> usize {
        action * self.n_features + feature
    }

    fn check(&self, state: &PolicyState) -> Result<(), GrpoError> {
        if state.features.len() != self.n_features {
            return Err(GrpoError::Shape { expected: self.n_features, actual: state.features.len() });
        }
        if state.allowed.len() != self.n_actions {
            return Err(GrpoError::Shape { expected: self.n_actions, actual: state.allowed.len() });
        }
        if !state.allowed.iter().any(|a| *a) {
            return Err(GrpoError::NoLegalAction);
        }
        Ok(())
    }

    fn logits(&self, state: &PolicyState) -> Vec<f64> {
        (0..self.n_actions)
            .map(|a| {
                if !state.allowed[a] {
                    return f64::NEG_INFINITY;
                }
                let row = &self.params[a * self.n_features..(a + 1) * self.n_features];
                row.iter().zip(&state.features).map(|(w, x)| w * x).sum()
            })
            .collect()
    }

    /// Log-probabilities of every action; disallowed actions get -inf.
    pub fn log_probs(&self, state: &PolicyState) -> Result<Vec<f64>, GrpoError> {
        self.check(state)?;
        let logits = self.logits(state);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Ok(logits.into_iter().map(|l| l - lse).collect())
    }

    pub fn probabilities(&self, state: &PolicyState) -> Result<Vec<f64>, GrpoError> {
        Ok(self.log_probs(state)?.into_iter().map(f64::exp).collect())
    }

    pub fn logprob(&self, state: &PolicyState, action: usize) -> Result<f64, GrpoError> {
        if action >= self.n_actions {
            return Err(GrpoError::Shape { expected: self.n_actions, actual: action });
        }
        Ok(self.log_probs(state)?[action])
    }

    /// d log π(action | state) / dθ, laid out like the parameters.
    pub fn grad_logprob(&self, state: &PolicyState, action: usize) -> Result<Vec<f64>, GrpoError> {
        let probs = self.probabilities(state)?;
        let mut grad = vec![0.0; self.params.len()];
        for (b, p) in probs.iter().enumerate() {
            if !state.allowed[b] {
                continue;
            }
            let coeff = f64::from(u8::from(b == action)) - p;
            for (f, x) in state.features.iter().enumerate() {
                grad[b * self.n_features + f] = coeff * x;
            }
        }
        Ok(grad)
    }

    pub fn sample<R: Rng + ?Sized>(&self, state: &PolicyState, rng: &mut R) -> Result<TokenSample, GrpoError> {
        let log_probs = self.log_probs(state)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (a, lp) in log_probs.iter().enumerate() {
            if !state.allowed[a] {
                continue;
            }
            acc += lp.exp();
            chosen = Some(a);
            if u < acc {
                break;
            }
        }
        let action = chosen.ok_or(GrpoError::NoLegalAction)?;
        Ok(TokenSample { state: state.clone(), action, logprob: log_probs[action] })
    }
}
