//! Episodic environment around the secure SIM downlink.
//!
//! Channels are quasi-static inside an episode and resampled on every
//! [`SecrecyEnv::reset`]. Actions are unbounded real vectors; the environment
//! squashes them into a feasible power split and phase configuration, so the
//! power budget and the phase range always hold.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    corrupt_eve_csi, path_loss, sample_channel, spatial_correlation, ChannelParams,
    ChannelRealization, CorrelationFactor, NodePlacement,
};
use crate::error::{Error, Result};
use crate::geometry::{
    build_propagation_matrices, PhaseConfiguration, PropagationMatrices, SimGeometry,
};
use crate::secrecy::{evaluate, LinkBudget, PowerAllocation, SecrecyReport};

/// Power logits are clipped to this magnitude before exponentiation.
pub const POWER_LOGIT_CLIP: f64 = 20.0;

/// Per-step quantities the trainer aggregates into metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub asr: f64,
    pub jain: f64,
    pub qos_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub metrics: Option<StepMetrics>,
}

/// The interface agents train against.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
    /// A raw action whose decoded form is uniform over the feasible set.
    fn random_action(&self, rng: &mut dyn RngCore) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub geometry: SimGeometry,
    pub channel: ChannelParams,
    /// Steps per episode.
    pub horizon: usize,
    /// Transmit power budget, watts.
    pub p0: f64,
    /// Minimum per-user rate, bits/s/Hz.
    pub min_rate: f64,
    /// Horizontal distance range for users and the eavesdropper, meters.
    pub min_distance: f64,
    pub max_distance: f64,
    pub bs_height: f64,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.channel.validate()?;
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be positive"));
        }
        if !(self.p0.is_finite() && self.p0 > 0.0) {
            return Err(Error::config("p0_dbm", "power budget must be positive"));
        }
        if !(self.min_rate >= 0.0) {
            return Err(Error::config("r_min", "must be non-negative"));
        }
        if !(self.min_distance >= 0.0 && self.max_distance >= self.min_distance) {
            return Err(Error::config("max_distance", "distance range is empty"));
        }
        if !(self.bs_height >= 0.0) {
            return Err(Error::config("bs_height", "must be non-negative"));
        }
        if self.bs_height.hypot(self.min_distance) < 1.0 {
            return Err(Error::config(
                "min_distance",
                "link distance must be at least the 1 m reference",
            ));
        }
        Ok(())
    }
}

/// Observation: interleaved real/imaginary parts of the user channels followed
/// by the eavesdropper estimate, scaled to O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub raw_channels: ChannelRealization,
    pub encoded: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub info: SecrecyReport,
}

pub struct SecrecyEnv {
    config: EnvConfig,
    props: PropagationMatrices,
    correlation: CorrelationFactor,
    budget: LinkBudget,
    state_scale: f64,
    state: Option<EnvState>,
    steps: usize,
}

impl SecrecyEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let props = build_propagation_matrices(&config.geometry)?;
        let correlation = CorrelationFactor::new(&spatial_correlation(&config.geometry)?)?;
        let nearest = config.bs_height.hypot(config.min_distance);
        let beta_max = path_loss(nearest, &config.channel)?;
        let budget = LinkBudget {
            noise_power_user: config.channel.noise_power_user,
            noise_power_eve: config.channel.noise_power_eve,
            min_rate: config.min_rate,
        };
        Ok(Self {
            state_scale: 1.0 / beta_max.sqrt(),
            config,
            props,
            correlation,
            budget,
            state: None,
            steps: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn propagation(&self) -> &PropagationMatrices {
        &self.props
    }

    pub fn link_budget(&self) -> &LinkBudget {
        &self.budget
    }

    /// Multiplier applied to channel entries in the encoded state.
    pub fn state_scale(&self) -> f64 {
        self.state_scale
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn num_users(&self) -> usize {
        self.config.geometry.num_users
    }

    pub fn state_dim(&self) -> usize {
        let g = &self.config.geometry;
        2 * g.atoms_per_layer * (g.num_users + 1)
    }

    pub fn action_len(&self) -> usize {
        let g = &self.config.geometry;
        g.num_users + g.atoms_per_layer * g.num_layers
    }

    /// Samples placements and channels for a new episode.
    pub fn reset_state(&mut self, seed: u64) -> Result<&EnvState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = &self.config;
        let draw = |rng: &mut ChaCha8Rng| -> Result<_> {
            let place =
                NodePlacement::sample(rng, cfg.min_distance, cfg.max_distance, cfg.bs_height);
            sample_channel(&place, &cfg.channel, &self.correlation, &cfg.geometry, rng)
        };
        let h_users = (0..cfg.geometry.num_users)
            .map(|_| draw(&mut rng))
            .collect::<Result<Vec<_>>>()?;
        let h_eve_true = draw(&mut rng)?;
        let (h_eve_est, h_eve_err) =
            corrupt_eve_csi(&h_eve_true, cfg.channel.csi_uncertainty, &mut rng)?;
        let channels = ChannelRealization {
            h_users,
            h_eve_true,
            h_eve_est,
            h_eve_err,
        };
        Ok(self.set_channels(channels))
    }

    /// Starts an episode on the given channels.
    pub fn set_channels(&mut self, channels: ChannelRealization) -> &EnvState {
        let encoded = self.encode(&channels);
        self.steps = 0;
        self.state.insert(EnvState {
            raw_channels: channels,
            encoded,
        })
    }

    fn encode(&self, channels: &ChannelRealization) -> Vec<f64> {
        let s = self.state_scale;
        channels
            .h_users
            .iter()
            .chain(std::iter::once(&channels.h_eve_est))
            .flat_map(|h| h.iter().flat_map(move |z| [z.re * s, z.im * s]))
            .collect()
    }

    /// Maps a raw action onto the simplex-scaled power split and phases.
    pub fn decode_action(&self, raw: &[f64]) -> Result<(PowerAllocation, PhaseConfiguration)> {
        let g = &self.config.geometry;
        decode_action(raw, g.num_users, g.num_layers, g.atoms_per_layer, self.config.p0)
    }

    pub fn step_outcome(&mut self, raw: &[f64]) -> Result<StepOutcome> {
        if self.steps >= self.config.horizon {
            return Err(Error::domain("episode finished; call reset"));
        }
        let (power, phases) = self.decode_action(raw)?;
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::domain("step called before reset"))?;
        let info = evaluate(&state.raw_channels, &phases, &power, &self.props, &self.budget)?;
        let reward = if info.qos_ok { info.asr } else { 0.0 };
        self.steps += 1;
        Ok(StepOutcome {
            next_state: state.clone(),
            reward,
            done: self.steps >= self.config.horizon,
            info,
        })
    }
}

impl Environment for SecrecyEnv {
    fn observation_dim(&self) -> usize {
        self.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.action_len()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.reset_state(seed)
            .expect("validated configuration cannot fail to sample")
            .encoded
            .clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        let out = self.step_outcome(action)?;
        Ok(EnvStep {
            observation: out.next_state.encoded,
            reward: out.reward,
            done: out.done,
            metrics: Some(StepMetrics {
                asr: out.info.asr,
                jain: out.info.jain,
                qos_ok: out.info.qos_ok,
            }),
        })
    }

    fn random_action(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let g = &self.config.geometry;
        random_raw_action(rng, g.num_users, g.num_layers * g.atoms_per_layer)
    }
}

/// Raw vector whose decoding is a Dirichlet(1) power split and i.i.d. uniform phases.
pub fn random_raw_action(rng: &mut dyn RngCore, users: usize, phases: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(users + phases);
    for _ in 0..users {
        // −ln U is Exp(1); normalizing exponentials gives a flat Dirichlet.
        let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        out.push((-u.ln()).ln().clamp(-POWER_LOGIT_CLIP, POWER_LOGIT_CLIP));
    }
    for _ in 0..phases {
        let u: f64 = rng.random_range(-1.0..1.0);
        out.push(u.clamp(-1.0 + 1e-12, 1.0 - 1e-12).atanh());
    }
    out
}

/// `p = P0 · softmax(clip(logits))`, `θ = (tanh(x) + 1)·π` wrapped into `[0, 2π)`.
pub fn decode_action(
    raw: &[f64],
    users: usize,
    layers: usize,
    atoms: usize,
    p0: f64,
) -> Result<(PowerAllocation, PhaseConfiguration)> {
    let expected = users + layers * atoms;
    if raw.len() != expected {
        return Err(Error::shape(format!(
            "action has {} entries, expected {expected}",
            raw.len()
        )));
    }
    if raw.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("action contains NaN"));
    }
    let logits: Vec<f64> = raw[..users]
        .iter()
        .map(|v| v.clamp(-POWER_LOGIT_CLIP, POWER_LOGIT_CLIP))
        .collect();
    let peak = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    let power = PowerAllocation(weights.iter().map(|w| p0 * w / total).collect());
    let angles: Vec<f64> = raw[users..]
        .iter()
        .map(|&x| (x.tanh() + 1.0) * PI)
        .collect();
    let phases = PhaseConfiguration::wrapped(layers, atoms, &angles)?;
    Ok((power, phases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dbm_to_watts, CVector};
    use crate::geometry::TWO_PI;
    use num_complex::Complex64;
    use proptest::prelude::*;

    pub(crate) fn desk_config() -> EnvConfig {
        EnvConfig {
            geometry: SimGeometry::standard(2, 9, 2, 2).unwrap(),
            channel: ChannelParams::default(),
            horizon: 20,
            p0: dbm_to_watts(10.0),
            min_rate: 0.0,
            min_distance: 75.0,
            max_distance: 100.0,
            bs_height: 10.0,
        }
    }

    #[test]
    fn reset_is_deterministic_and_sized() {
        let mut env = SecrecyEnv::new(desk_config()).unwrap();
        let a = env.reset(17);
        let b = env.reset(17);
        assert_eq!(a, b);
        assert_ne!(a, env.reset(18));
        assert_eq!(a.len(), 2 * 9 * 3);
        assert!(a.iter().all(|v| v.is_finite()));

        let mut cfg = desk_config();
        cfg.geometry = SimGeometry::standard(3, 25, 4, 3).unwrap();
        let mut big = SecrecyEnv::new(cfg).unwrap();
        assert_eq!(big.reset(0).len(), 200);
    }

    #[test]
    fn perfect_csi_state_tail_is_true_eve_channel() {
        let mut cfg = desk_config();
        cfg.channel.csi_uncertainty = 0.0;
        let mut env = SecrecyEnv::new(cfg).unwrap();
        let state = env.reset_state(4).unwrap().clone();
        let tail = &state.encoded[state.encoded.len() - 18..];
        let s = env.state_scale();
        for (i, z) in state.raw_channels.h_eve_true.iter().enumerate() {
            assert_eq!(tail[2 * i], z.re * s);
            assert_eq!(tail[2 * i + 1], z.im * s);
        }
    }

    #[test]
    fn decode_examples() {
        let env = SecrecyEnv::new(desk_config()).unwrap();
        let mut raw = vec![0.0; env.action_len()];
        raw[0] = 1.5;
        raw[1] = 1.5;
        let (p, phases) = env.decode_action(&raw).unwrap();
        assert!((p.0[0] - env.config().p0 / 2.0).abs() < 1e-18);
        assert!((p.0[1] - env.config().p0 / 2.0).abs() < 1e-18);
        assert!(phases.as_slice().iter().all(|&t| t == PI));

        raw[3] = f64::NAN;
        assert!(matches!(env.decode_action(&raw), Err(Error::InputDomain(_))));
        assert!(matches!(env.decode_action(&raw[..4]), Err(Error::Structural(_))));
    }

    proptest! {
        #[test]
        fn decoded_actions_are_always_feasible(raw in prop::collection::vec(-1e6f64..1e6, 20)) {
            let env = SecrecyEnv::new(desk_config()).unwrap();
            let (p, phases) = env.decode_action(&raw).unwrap();
            let p0 = env.config().p0;
            prop_assert!((p.total() - p0).abs() <= 1e-12 * p0);
            prop_assert!(p.0.iter().all(|&v| v >= 0.0));
            prop_assert!(phases.as_slice().iter().all(|&t| (0.0..TWO_PI).contains(&t)));
        }
    }

    #[test]
    fn infeasible_qos_gives_zero_reward() {
        let mut cfg = desk_config();
        cfg.min_rate = 1e3;
        let mut env = SecrecyEnv::new(cfg).unwrap();
        env.reset(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..5 {
            let a = env.random_action(&mut rng);
            let out = env.step_outcome(&a).unwrap();
            assert_eq!(out.reward, 0.0);
            assert!(!out.info.qos_ok);
        }
    }

    #[test]
    fn quasi_static_channels_within_episode() {
        let mut env = SecrecyEnv::new(desk_config()).unwrap();
        env.reset(8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = env.random_action(&mut rng);
        let first = env.step(&a).unwrap();
        let second = env.step(&a).unwrap();
        assert_eq!(first.reward, second.reward);
        assert_eq!(first.observation, second.observation);
    }

    #[test]
    fn episode_ends_at_horizon() {
        let mut env = SecrecyEnv::new(desk_config()).unwrap();
        env.reset(1);
        let a = vec![0.0; env.action_len()];
        for t in 1..=20 {
            let out = env.step(&a).unwrap();
            assert_eq!(out.done, t == 20);
            assert!(out.reward >= 0.0);
        }
        assert!(env.step(&a).is_err());
        env.reset(2);
        assert!(env.step(&a).is_ok());
    }

    #[test]
    fn reward_is_gated_asr() {
        let mut cfg = desk_config();
        cfg.min_rate = 0.2;
        let mut env = SecrecyEnv::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for ep in 0..20 {
            env.reset(ep);
            let a = env.random_action(&mut rng);
            let out = env.step_outcome(&a).unwrap();
            let want = if out.info.qos_ok { out.info.asr } else { 0.0 };
            assert_eq!(out.reward, want);
        }
    }

    #[test]
    fn random_actions_cover_phase_range() {
        let env = SecrecyEnv::new(desk_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut low = 0;
        let mut high = 0;
        for _ in 0..200 {
            let a = env.random_action(&mut rng);
            let (_, phases) = env.decode_action(&a).unwrap();
            low += phases.as_slice().iter().filter(|&&t| t < PI).count();
            high += phases.as_slice().iter().filter(|&&t| t >= PI).count();
        }
        let frac = low as f64 / (low + high) as f64;
        assert!((frac - 0.5).abs() < 0.03);
    }

    #[test]
    fn set_channels_restarts_episode() {
        let mut env = SecrecyEnv::new(desk_config()).unwrap();
        let zero = CVector::from_element(9, Complex64::new(0.0, 0.0));
        let ch = ChannelRealization {
            h_users: vec![zero.clone(), zero.clone()],
            h_eve_true: zero.clone(),
            h_eve_est: zero.clone(),
            h_eve_err: zero,
        };
        let state = env.set_channels(ch);
        assert!(state.encoded.iter().all(|&v| v == 0.0));
        let out = env.step_outcome(&[0.0; 20]).unwrap();
        assert_eq!(out.info.asr, 0.0);
    }
}
