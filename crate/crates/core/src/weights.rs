//! Versioned parameter store shared by rollout executors and the trainer.

use std::sync::{Arc, RwLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("version regression: store is at {current}, publish attempted {attempted}")]
pub struct VersionRegression {
    pub current: u64,
    pub attempted: u64,
}

#[derive(Debug)]
pub struct WeightStore<P> {
    inner: RwLock<(u64, Arc<P>)>,
}

impl<P> WeightStore<P> {
    /// Starts at version 0.
    pub fn new(params: P) -> Self {
        Self { inner: RwLock::new((0, Arc::new(params))) }
    }

    pub fn version(&self) -> u64 {
        self.inner.read().expect("weight store lock").0
    }

    pub fn snapshot(&self) -> (u64, Arc<P>) {
        let guard = self.inner.read().expect("weight store lock");
        (guard.0, Arc::clone(&guard.1))
    }

    /// Atomically installs `params` as `version`, which must be current + 1.
    pub fn publish(&self, version: u64, params: P) -> Result<(), VersionRegression> {
        let mut guard = self.inner.write().expect("weight store lock");
        if version != guard.0 + 1 {
            return Err(VersionRegression { current: guard.0, attempted: version });
        }
        *guard = (version, Arc::new(params));
        Ok(())
    }
}
