use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::rng::rng_for;

/// Log-normal duration in seconds: `exp(mu + sigma * z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    pub fn with_median(median_secs: f64, sigma: f64) -> Self {
        Self { mu: median_secs.ln(), sigma }
    }

    fn validate(&self) -> Result<(), SimError> {
        if !self.mu.is_finite() || !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(SimError::InvalidLatency(format!("mu={} sigma={}", self.mu, self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub generate: LogNormalParams,
    pub tool: LogNormalParams,
    pub seed: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            generate: LogNormalParams::with_median(4.0, 1.5),
            tool: LogNormalParams::with_median(1.0, 0.5),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationKind {
    Generate,
    Tool,
}

/// Seeded duration streams, one per kind, independent of each other.
#[derive(Debug, Clone)]
pub struct LatencySampler {
    model: LatencyModel,
    generate_rng: ChaCha8Rng,
    tool_rng: ChaCha8Rng,
}

impl LatencySampler {
    pub fn new(model: LatencyModel) -> Result<Self, SimError> {
        model.generate.validate()?;
        model.tool.validate()?;
        Ok(Self {
            model,
            generate_rng: rng_for(model.seed, "latency/generate", 0),
            tool_rng: rng_for(model.seed, "latency/tool", 0),
        })
    }

    pub fn model(&self) -> &LatencyModel {
        &self.model
    }

    pub fn sample_duration(&mut self, kind: DurationKind) -> f64 {
        let (params, rng) = match kind {
            DurationKind::Generate => (self.model.generate, &mut self.generate_rng),
            DurationKind::Tool => (self.model.tool, &mut self.tool_rng),
        };
        draw(params, rng)
    }
}

fn draw(params: LogNormalParams, rng: &mut impl Rng) -> f64 {
    if params.sigma == 0.0 {
        return params.mu.exp();
    }
    LogNormal::new(params.mu, params.sigma).expect("validated parameters").sample(rng)
}
