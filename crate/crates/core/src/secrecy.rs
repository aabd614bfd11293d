//! SINRs, per-user secrecy rates, average secrecy rate and Jain's index.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::geometry::{transfer_function, PhaseConfiguration, PropagationMatrices};

/// Transmit power per user stream, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation(pub Vec<f64>);

impl PowerAllocation {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!("power {bad} must be finite and non-negative")));
        }
        Ok(Self(p))
    }

    pub fn uniform(total: f64, users: usize) -> Self {
        Self(vec![total / users as f64; users])
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Noise levels and the QoS threshold used when scoring a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub noise_power_user: f64,
    pub noise_power_eve: f64,
    /// Minimum per-user rate, bits/s/Hz.
    pub min_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyReport {
    pub user_sinr: Vec<f64>,
    pub eve_sinr: Vec<f64>,
    pub user_rate: Vec<f64>,
    pub secrecy_rate: Vec<f64>,
    pub asr: f64,
    pub qos_ok: bool,
    pub jain: f64,
}

/// Receiver-by-stream gains `h_r^H G w¹_j`.
///
/// Rows `0..M` are the users, row `M` the eavesdropper estimate `ĥ_e` and row
/// `M+1` the estimation error `Δh_e`. Stream `j` is driven by antenna `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGains(pub DMatrix<Complex64>);

impl EffectiveGains {
    pub fn num_users(&self) -> usize {
        self.0.ncols()
    }

    pub fn user(&self, m: usize, j: usize) -> Complex64 {
        self.0[(m, j)]
    }

    pub fn eve_est(&self, j: usize) -> Complex64 {
        self.0[(self.num_users(), j)]
    }

    pub fn eve_err(&self, j: usize) -> Complex64 {
        self.0[(self.num_users() + 1, j)]
    }
}

pub fn effective_gains(
    channels: &ChannelRealization,
    g: &DMatrix<Complex64>,
    w1: &DMatrix<Complex64>,
) -> Result<EffectiveGains> {
    let n = channels.num_atoms();
    let m = channels.num_users();
    if g.shape() != (n, n) {
        return Err(Error::shape(format!(
            "transfer function is {:?}, expected {n}×{n}",
            g.shape()
        )));
    }
    if w1.nrows() != n || w1.ncols() < m {
        return Err(Error::shape(format!(
            "W1 is {:?}, need {n} rows and at least {m} antennas",
            w1.shape()
        )));
    }
    if channels.h_users.iter().any(|h| h.len() != n)
        || channels.h_eve_est.len() != n
        || channels.h_eve_err.len() != n
    {
        return Err(Error::shape("channel vectors have inconsistent lengths"));
    }
    let beams = g * w1.columns(0, m);
    let receivers = channels
        .h_users
        .iter()
        .chain([&channels.h_eve_est, &channels.h_eve_err]);
    let mut out = DMatrix::zeros(m + 2, m);
    for (r, h) in receivers.enumerate() {
        for j in 0..m {
            out[(r, j)] = h.dotc(&beams.column(j));
        }
    }
    Ok(EffectiveGains(out))
}

/// SINR of user `m` with every other stream as interference.
pub fn user_sinr(m: usize, gains: &EffectiveGains, p: &PowerAllocation, noise: f64) -> f64 {
    let p = p.as_slice();
    let signal = gains.user(m, m).norm_sqr() * p[m];
    let interference: f64 = (0..p.len())
        .filter(|&j| j != m)
        .map(|j| gains.user(m, j).norm_sqr() * p[j])
        .sum();
    signal / (interference + noise)
}

/// Eavesdropper SINR for stream `m`, treating its own CSI error as interference.
pub fn eve_sinr(m: usize, gains: &EffectiveGains, p: &PowerAllocation, noise: f64) -> f64 {
    let p = p.as_slice();
    let signal = gains.eve_est(m).norm_sqr() * p[m];
    let self_err = gains.eve_err(m).norm_sqr() * p[m];
    let others: f64 = (0..p.len())
        .filter(|&j| j != m)
        .map(|j| (gains.eve_est(j) + gains.eve_err(j)).norm_sqr() * p[j])
        .sum();
    signal / (self_err + others + noise)
}

/// `[log2(1+γ_m) − log2(1+γ_e)]⁺`.
pub fn secrecy_rate(user_sinr: f64, eve_sinr: f64) -> f64 {
    ((1.0 + user_sinr).log2() - (1.0 + eve_sinr).log2()).max(0.0)
}

/// `(Σx)² / (n Σx²)`, defined as 1 when every entry is zero.
pub fn jain_index(rates: &[f64]) -> f64 {
    let sum: f64 = rates.iter().sum();
    let sq: f64 = rates.iter().map(|r| r * r).sum();
    if sq == 0.0 {
        1.0
    } else {
        sum * sum / (rates.len() as f64 * sq)
    }
}

/// Scores gains that were already computed for a phase configuration.
pub fn report_from_gains(gains: &EffectiveGains, p: &PowerAllocation, budget: &LinkBudget) -> SecrecyReport {
    let m = gains.num_users();
    let user_sinr: Vec<f64> = (0..m)
        .map(|i| user_sinr(i, gains, p, budget.noise_power_user))
        .collect();
    let eve_sinr: Vec<f64> = (0..m)
        .map(|i| eve_sinr(i, gains, p, budget.noise_power_eve))
        .collect();
    let user_rate: Vec<f64> = user_sinr.iter().map(|g| (1.0 + g).log2()).collect();
    let secrecy: Vec<f64> = user_sinr
        .iter()
        .zip(&eve_sinr)
        .map(|(&u, &e)| secrecy_rate(u, e))
        .collect();
    let asr = secrecy.iter().sum::<f64>() / m as f64;
    let qos_ok = user_rate.iter().all(|&r| r >= budget.min_rate);
    let jain = jain_index(&secrecy);
    SecrecyReport {
        user_sinr,
        eve_sinr,
        user_rate,
        secrecy_rate: secrecy,
        asr,
        qos_ok,
        jain,
    }
}

/// Full objective evaluation for a channel block and a configuration.
pub fn evaluate(
    channels: &ChannelRealization,
    phases: &PhaseConfiguration,
    p: &PowerAllocation,
    props: &PropagationMatrices,
    budget: &LinkBudget,
) -> Result<SecrecyReport> {
    if p.as_slice().len() != channels.num_users() {
        return Err(Error::shape(format!(
            "{} power entries for {} users",
            p.as_slice().len(),
            channels.num_users()
        )));
    }
    let g = transfer_function(phases, props)?;
    let gains = effective_gains(channels, &g, &props.w1)?;
    Ok(report_from_gains(&gains, p, budget))
}
