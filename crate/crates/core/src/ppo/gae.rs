//! Advantage estimation and the PPO ratio clip.

use crate::error::{Error, Result};

/// Generalized advantage estimation with explicit bootstrap values.
///
/// `next_values[t]` is the value credited to the state after step `t`
/// (zero for a true terminal). `ends[t]` stops the backward recursion, so
/// advantages never leak across an episode boundary.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    ends: &[bool],
    discount: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || next_values.len() != n || ends.len() != n {
        return Err(Error::shape(format!(
            "GAE inputs differ in length: rewards {n}, values {}, next_values {}, ends {}",
            values.len(),
            next_values.len(),
            ends.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        if ends[t] {
            running = 0.0;
        }
        let delta = rewards[t] + discount * next_values[t] - values[t];
        running = delta + discount * lambda * running;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Textbook form: `dones[t]` marks a terminal transition (no bootstrap) and
/// `last_value` bootstraps the step after the final one.
pub fn compute_gae_terminal(
    rewards: &[f64],
    values: &[f64],
    last_value: f64,
    dones: &[bool],
    discount: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = values.len();
    let next_values: Vec<f64> = (0..n)
        .map(|t| match (dones.get(t), t + 1 < n) {
            (Some(true), _) => 0.0,
            (_, true) => values[t + 1],
            _ => last_value,
        })
        .collect();
    compute_gae(rewards, values, &next_values, dones, discount, lambda)
}

pub fn clip_ratio(ratio: f64, epsilon: f64) -> f64 {
    ratio.clamp(1.0 - epsilon, 1.0 + epsilon)
}

/// Zero-mean, unit-variance rescaling with an epsilon-guarded denominator.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    if adv.is_empty() {
        return Vec::new();
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let denom = var.sqrt() + 1e-8;
    adv.iter().map(|a| (a - mean) / denom).collect()
}
