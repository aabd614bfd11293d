//! Trajectory storage for one PPO iteration.

use super::gae::compute_gae;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Value of the observation that followed each step.
    pub next_values: Vec<f64>,
    /// True where an episode ended after this step.
    pub dones: Vec<bool>,
    pub advantages: Option<Vec<f64>>,
    pub returns: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub state: &'a [f64],
    pub action: &'a [f64],
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub next_value: f64,
    pub done: bool,
}

impl RolloutBuffer {
    pub fn new(obs_dim: usize, action_dim: usize) -> Self {
        Self {
            obs_dim,
            action_dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.state.len() != self.obs_dim || t.action.len() != self.action_dim {
            return Err(Error::shape("transition does not match buffer dimensions"));
        }
        self.states.extend_from_slice(t.state);
        self.actions.extend_from_slice(t.action);
        self.log_probs.push(t.log_prob);
        self.rewards.push(t.reward);
        self.values.push(t.value);
        self.next_values.push(t.next_value);
        self.dones.push(t.done);
        self.advantages = None;
        self.returns = None;
        Ok(())
    }

    pub fn compute_gae(&mut self, discount: f64, lambda: f64) -> Result<()> {
        let (adv, ret) = compute_gae(
            &self.rewards,
            &self.values,
            &self.next_values,
            &self.dones,
            discount,
            lambda,
        )?;
        self.advantages = Some(adv);
        self.returns = Some(ret);
        Ok(())
    }

    pub fn clear(&mut self) {
        *self = Self::new(self.obs_dim, self.action_dim);
    }
}
