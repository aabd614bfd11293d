//! Small environments with known optima for checking the learning machinery.

use rand::{Rng, RngCore};

use crate::env::{EnvStep, Environment};
use crate::error::{Error, Result};

/// One-dimensional continuous bandit with reward `−|a − target|`.
#[derive(Debug, Clone)]
pub struct TargetEnv {
    pub target: f64,
    pub horizon: usize,
    steps: usize,
}

impl TargetEnv {
    pub fn new(target: f64, horizon: usize) -> Self {
        Self {
            target,
            horizon,
            steps: 0,
        }
    }
}

impl Default for TargetEnv {
    fn default() -> Self {
        Self::new(0.5, 20)
    }
}

impl Environment for TargetEnv {
    fn observation_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.steps = 0;
        vec![1.0]
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if action.len() != 1 {
            return Err(Error::shape("target env takes a single action"));
        }
        if action[0].is_nan() {
            return Err(Error::domain("action contains NaN"));
        }
        self.steps += 1;
        Ok(EnvStep {
            observation: vec![1.0],
            reward: -(action[0] - self.target).abs(),
            done: self.steps >= self.horizon,
            metrics: None,
        })
    }

    fn random_action(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random_range(-1.0..2.0)]
    }
}
