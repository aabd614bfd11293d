//! Clipped-surrogate, value and entropy losses with their gradients.

use serde::{Deserialize, Serialize};

use super::actor::{Critic, GaussianActor};
use super::gae::clip_ratio;
use super::gaussian::{gaussian_entropy, gaussian_log_prob, LOG_STD_MAX, LOG_STD_MIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoHyper {
    pub discount: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub batch_steps: usize,
    pub entropy_coeff: f64,
    pub value_coeff: f64,
    pub lr: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoHyper {
    fn default() -> Self {
        Self {
            discount: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            epochs: 10,
            minibatch: 64,
            batch_steps: 1024,
            entropy_coeff: 0.01,
            value_coeff: 0.5,
            lr: 3e-4,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoHyper {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.discount) {
            return Err(Error::config("ppo.discount", "must lie in [0, 1]"));
        }
        if !unit(self.gae_lambda) {
            return Err(Error::config("ppo.gae_lambda", "must lie in [0, 1]"));
        }
        if !(self.clip > 0.0) {
            return Err(Error::config("ppo.clip", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("ppo.epochs", "must be at least 1"));
        }
        if self.minibatch == 0 {
            return Err(Error::config("ppo.minibatch", "must be at least 1"));
        }
        if self.batch_steps == 0 {
            return Err(Error::config("ppo.batch_steps", "must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("ppo.lr", "must be positive"));
        }
        if !(self.max_grad_norm > 0.0) {
            return Err(Error::config("ppo.max_grad_norm", "must be positive"));
        }
        if !self.entropy_coeff.is_finite() || !self.value_coeff.is_finite() {
            return Err(Error::config("ppo.entropy_coeff", "coefficients must be finite"));
        }
        Ok(())
    }
}

/// Frozen samples for one gradient step. Row-major `n × dim` buffers.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    pub states: &'a [f64],
    pub actions: &'a [f64],
    pub old_log_probs: &'a [f64],
    /// Already normalized if normalization is wanted.
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    pub clip_fraction: f64,
}

/// Loss values and gradients of `total` w.r.t. actor and critic parameters.
#[derive(Debug, Clone)]
pub struct LossGradients {
    pub report: LossReport,
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
}

pub fn ppo_losses(
    mb: &Minibatch,
    actor: &GaussianActor,
    critic: &Critic,
    hyper: &PpoHyper,
) -> Result<LossGradients> {
    let n = mb.len();
    if n == 0 {
        return Err(Error::domain("empty minibatch"));
    }
    let ad = actor.action_dim();
    let od = actor.obs_dim();
    if mb.states.len() != n * od
        || mb.actions.len() != n * ad
        || mb.advantages.len() != n
        || mb.returns.len() != n
    {
        return Err(Error::shape("minibatch buffers are not aligned"));
    }
    let nf = n as f64;
    let (means, cache) = actor.mean(mb.states, n)?;
    let std: Vec<f64> = actor.log_std.iter().map(|l| l.exp()).collect();

    let mut surrogate = 0.0;
    let mut clipped = 0usize;
    let mut d_mean = vec![0.0; n * ad];
    let mut d_log_std = vec![0.0; ad];
    for i in 0..n {
        let mean = &means[i * ad..(i + 1) * ad];
        let action = &mb.actions[i * ad..(i + 1) * ad];
        let lp = gaussian_log_prob(mean, &actor.log_std, action);
        let ratio = (lp - mb.old_log_probs[i]).exp();
        let adv = mb.advantages[i];
        let unclipped = ratio * adv;
        let bounded = clip_ratio(ratio, hyper.clip) * adv;
        surrogate += unclipped.min(bounded);
        if (ratio - 1.0).abs() > hyper.clip {
            clipped += 1;
        }
        // The min selects the unclipped branch on ties, where both agree.
        if unclipped <= bounded {
            let coef = -unclipped / nf;
            for j in 0..ad {
                let z = (action[j] - mean[j]) / std[j];
                d_mean[i * ad + j] = coef * z / std[j];
                d_log_std[j] += coef * (z * z - 1.0);
            }
        }
    }
    surrogate /= nf;
    let entropy = gaussian_entropy(&actor.log_std);
    for (g, ls) in d_log_std.iter_mut().zip(&actor.log_std) {
        if *ls > LOG_STD_MIN && *ls < LOG_STD_MAX {
            *g -= hyper.entropy_coeff;
        }
    }

    let mut actor_grad = actor.mean_backward(&cache, &d_mean)?;
    actor_grad.extend(d_log_std);

    let vcache = critic.net.forward(mb.states, n)?;
    let values = vcache.output();
    let mut value_loss = 0.0;
    let mut d_value = vec![0.0; n];
    for i in 0..n {
        let err = mb.returns[i] - values[i];
        value_loss += err * err;
        d_value[i] = -2.0 * hyper.value_coeff * err / nf;
    }
    value_loss /= nf;
    let (critic_grad, _) = critic.net.backward(&vcache, &d_value)?;

    let total = -surrogate - hyper.entropy_coeff * entropy + hyper.value_coeff * value_loss;
    Ok(LossGradients {
        report: LossReport {
            surrogate,
            value_loss,
            entropy,
            total,
            clip_fraction: clipped as f64 / nf,
        },
        actor: actor_grad,
        critic: critic_grad,
    })
}
