//! Policy and value networks: classical MLP, hybrid Pre-NN → PQC → Post-NN,
//! and the discrete softmax-PQC head.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::{clamp_log_std, gaussian_log_prob};
use crate::error::{Error, Result};
use crate::neural::{Activation, ForwardCache, LayerSpec, Network, Shape};
use crate::quantum::{
    pqc_backward, pqc_forward, softmax_policy, PolicyConfig, PqcGradients, PqcParameters,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Classical,
    Quantum,
    Random,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Classical => "classical",
            AgentKind::Quantum => "quantum",
            AgentKind::Random => "random",
        }
    }

    pub const ALL: [AgentKind; 3] = [AgentKind::Classical, AgentKind::Quantum, AgentKind::Random];
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(AgentKind::Classical),
            "quantum" => Ok(AgentKind::Quantum),
            "random" => Ok(AgentKind::Random),
            _ => Err(Error::config("kind", format!("unknown agent kind `{s}`"))),
        }
    }
}

/// Architecture of the actor and critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    /// Hidden widths of the classical actor and of every critic.
    pub hidden: Vec<usize>,
    pub qubits: usize,
    pub pqc_layers: usize,
    pub inverse_temperature: f64,
    pub pre_filters: usize,
    pub pre_kernel: usize,
    pub pre_stride: usize,
    pub pre_dense: usize,
    pub post_hidden: Vec<usize>,
    pub init_log_std: f64,
    /// Multiplier on the initial weights of the policy's output layer.
    pub output_scale: f64,
}

impl AgentConfig {
    pub fn paper(kind: AgentKind) -> Self {
        Self {
            kind,
            hidden: vec![1024; 4],
            qubits: 5,
            pqc_layers: 3,
            inverse_temperature: 1.0,
            pre_filters: 128,
            pre_kernel: 3,
            pre_stride: 2,
            pre_dense: 64,
            post_hidden: vec![62, 32],
            init_log_std: 0.0,
            output_scale: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::config("agent.hidden", "widths must be positive"));
        }
        if self.post_hidden.contains(&0) {
            return Err(Error::config("agent.post_hidden", "widths must be positive"));
        }
        if self.qubits == 0 || self.qubits > crate::quantum::MAX_QUBITS {
            return Err(Error::config(
                "agent.qubits",
                format!("{} outside 1..={}", self.qubits, crate::quantum::MAX_QUBITS),
            ));
        }
        if self.pqc_layers == 0 {
            return Err(Error::config("agent.pqc_layers", "must be at least 1"));
        }
        if !(self.inverse_temperature > 0.0 && self.inverse_temperature.is_finite()) {
            return Err(Error::config("agent.inverse_temperature", "must be positive"));
        }
        if self.pre_filters == 0 || self.pre_stride == 0 || self.pre_dense == 0 {
            return Err(Error::config("agent.pre_filters", "Pre-NN sizes must be positive"));
        }
        if self.pre_kernel.is_multiple_of(2) {
            return Err(Error::config("agent.pre_kernel", "kernel size must be odd"));
        }
        if !self.init_log_std.is_finite() {
            return Err(Error::config("agent.init_log_std", "must be finite"));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::config("agent.output_scale", "must be positive"));
        }
        Ok(())
    }
}

fn mlp_specs(hidden: &[usize], out: usize, out_act: Activation) -> Vec<LayerSpec> {
    hidden
        .iter()
        .map(|&units| LayerSpec::Dense {
            units,
            activation: Activation::Relu,
        })
        .chain(std::iter::once(LayerSpec::Dense {
            units: out,
            activation: out_act,
        }))
        .collect()
}

/// Sequence view of a flat observation: 2 channels (re, im) when possible.
pub fn sequence_shape(obs_dim: usize) -> Shape {
    if obs_dim.is_multiple_of(2) {
        (obs_dim / 2, 2)
    } else {
        (obs_dim, 1)
    }
}

/// Pre-NN → PQC → Post-NN.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridNet {
    pub pre: Network,
    pub pqc: PqcParameters,
    pub policy: PolicyConfig,
    pub post: Network,
}

#[derive(Debug, Clone)]
pub struct HybridCache {
    pre: ForwardCache,
    features: Vec<f64>,
    post: ForwardCache,
}

impl HybridNet {
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        cfg: &AgentConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let q = cfg.qubits;
        let conv = LayerSpec::Conv1d {
            filters: cfg.pre_filters,
            kernel: cfg.pre_kernel,
            stride: cfg.pre_stride,
            activation: Activation::Relu,
        };
        let pre_specs = [
            conv,
            conv,
            LayerSpec::Dense {
                units: cfg.pre_dense,
                activation: Activation::Relu,
            },
            LayerSpec::Dense {
                units: q,
                activation: Activation::Tanh,
            },
        ];
        let pre = Network::init(sequence_shape(obs_dim), &pre_specs, rng)?;
        let pqc = PqcParameters::init(q, cfg.pqc_layers, q, rng)?;
        let policy = PolicyConfig::pauli_z(q, q, cfg.inverse_temperature);
        let mut post = Network::init(
            (1, q),
            &mlp_specs(&cfg.post_hidden, action_dim, Activation::Identity),
            rng,
        )?;
        post.scale_output_layer(cfg.output_scale);
        Ok(Self {
            pre,
            pqc,
            policy,
            post,
        })
    }

    pub fn num_params(&self) -> usize {
        self.pre.num_params() + self.pqc.len() + self.post.num_params()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v = self.pre.params().to_vec();
        v.extend(self.pqc.to_flat());
        v.extend_from_slice(self.post.params());
        v
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(format!(
                "hybrid actor has {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let (a, rest) = flat.split_at(self.pre.num_params());
        let (b, c) = rest.split_at(self.pqc.len());
        self.pre.set_params(a)?;
        self.pqc.load_flat(b)?;
        self.post.set_params(c)
    }

    /// Circuit inputs in `[−π, π]` for a batch of observations.
    pub fn features(&self, states: &[f64], batch: usize) -> Result<Vec<f64>> {
        Ok(self
            .pre
            .predict(states, batch)?
            .into_iter()
            .map(|v| v * PI)
            .collect())
    }

    pub fn forward(&self, states: &[f64], batch: usize) -> Result<(Vec<f64>, HybridCache)> {
        let pre = self.pre.forward(states, batch)?;
        let features: Vec<f64> = pre.output().iter().map(|v| v * PI).collect();
        let q = self.pqc.num_qubits;
        let mut measured = Vec::with_capacity(batch * q);
        for f in features.chunks(q) {
            measured.extend(pqc_forward(&self.pqc, &self.policy, f)?);
        }
        let post = self.post.forward(&measured, batch)?;
        let out = post.output().to_vec();
        Ok((out, HybridCache {
            pre,
            features,
            post,
        }))
    }

    pub fn backward(&self, cache: &HybridCache, d_out: &[f64]) -> Result<Vec<f64>> {
        let (g_post, d_meas) = self.post.backward(&cache.post, d_out)?;
        let q = self.pqc.num_qubits;
        let mut g_pqc = vec![0.0; self.pqc.len()];
        let mut d_pre = Vec::with_capacity(cache.features.len());
        for (f, d) in cache.features.chunks(q).zip(d_meas.chunks(q)) {
            let g: PqcGradients = pqc_backward(&self.pqc, &self.policy, f, d)?;
            for (acc, v) in g_pqc.iter_mut().zip(g.to_flat()) {
                *acc += v;
            }
            d_pre.extend(g.features.iter().map(|v| v * PI));
        }
        let (g_pre, _) = self.pre.backward(&cache.pre, &d_pre)?;
        let mut flat = g_pre;
        flat.extend(g_pqc);
        flat.extend(g_post);
        Ok(flat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyBody {
    Classical(Network),
    Hybrid(Box<HybridNet>),
}

#[derive(Debug, Clone)]
pub enum BodyCache {
    Classical(ForwardCache),
    Hybrid(Box<HybridCache>),
}

/// Gaussian policy: a network producing the mean plus a trainable log-std.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianActor {
    pub body: PolicyBody,
    pub log_std: Vec<f64>,
}

impl GaussianActor {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        cfg: &AgentConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let body = match cfg.kind {
            AgentKind::Classical => {
                let mut net = Network::init(
                    (1, obs_dim),
                    &mlp_specs(&cfg.hidden, action_dim, Activation::Identity),
                    rng,
                )?;
                net.scale_output_layer(cfg.output_scale);
                PolicyBody::Classical(net)
            }
            AgentKind::Quantum => {
                PolicyBody::Hybrid(Box::new(HybridNet::init(obs_dim, action_dim, cfg, rng)?))
            }
            AgentKind::Random => {
                return Err(Error::config("agent.kind", "the random agent has no actor network"))
            }
        };
        Ok(Self {
            body,
            log_std: vec![clamp_log_std(cfg.init_log_std); action_dim],
        })
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn obs_dim(&self) -> usize {
        match &self.body {
            PolicyBody::Classical(n) => n.input_dim(),
            PolicyBody::Hybrid(h) => h.pre.input_dim(),
        }
    }

    pub fn body_params(&self) -> usize {
        match &self.body {
            PolicyBody::Classical(n) => n.num_params(),
            PolicyBody::Hybrid(h) => h.num_params(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.body_params() + self.log_std.len()
    }

    /// Body parameters followed by the log-std vector.
    pub fn params(&self) -> Vec<f64> {
        let mut v = match &self.body {
            PolicyBody::Classical(n) => n.params().to_vec(),
            PolicyBody::Hybrid(h) => h.params(),
        };
        v.extend_from_slice(&self.log_std);
        v
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(format!(
                "actor has {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let (body, log_std) = flat.split_at(self.body_params());
        match &mut self.body {
            PolicyBody::Classical(n) => n.set_params(body)?,
            PolicyBody::Hybrid(h) => h.set_params(body)?,
        }
        for (dst, src) in self.log_std.iter_mut().zip(log_std) {
            *dst = clamp_log_std(*src);
        }
        Ok(())
    }

    pub fn mean(&self, states: &[f64], batch: usize) -> Result<(Vec<f64>, BodyCache)> {
        match &self.body {
            PolicyBody::Classical(n) => {
                let c = n.forward(states, batch)?;
                Ok((c.output().to_vec(), BodyCache::Classical(c)))
            }
            PolicyBody::Hybrid(h) => {
                let (out, c) = h.forward(states, batch)?;
                Ok((out, BodyCache::Hybrid(Box::new(c))))
            }
        }
    }

    /// Gradient of the body parameters for `d_mean = ∂loss/∂mean`.
    pub fn mean_backward(&self, cache: &BodyCache, d_mean: &[f64]) -> Result<Vec<f64>> {
        match (&self.body, cache) {
            (PolicyBody::Classical(n), BodyCache::Classical(c)) => Ok(n.backward(c, d_mean)?.0),
            (PolicyBody::Hybrid(h), BodyCache::Hybrid(c)) => h.backward(c, d_mean),
            _ => Err(Error::shape("cache was produced by a different actor body")),
        }
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let (mean, _) = self.mean(state, 1)?;
        Ok(gaussian_log_prob(&mean, &self.log_std, action))
    }
}

/// State-value network.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub net: Network,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        Ok(Self {
            net: Network::init((1, obs_dim), &mlp_specs(hidden, 1, Activation::Identity), rng)?,
        })
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.net.predict(state, 1)?[0])
    }

    pub fn values(&self, states: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.net.predict(states, batch)
    }
}

/// Discrete policy `π(a|s) = softmax(ζ⟨O_a⟩)` read directly off the circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPqcPolicy {
    pub pqc: PqcParameters,
    pub policy: PolicyConfig,
}

impl SoftmaxPqcPolicy {
    pub fn probabilities(&self, features: &[f64]) -> Result<Vec<f64>> {
        let e = pqc_forward(&self.pqc, &self.policy, features)?;
        softmax_policy(&e, self.policy.inverse_temperature)
    }

    /// `∇ log π(action | features)` in [`PqcParameters::to_flat`] order.
    pub fn log_prob_gradient(&self, features: &[f64], action: usize) -> Result<Vec<f64>> {
        let probs = self.probabilities(features)?;
        if action >= probs.len() {
            return Err(Error::domain(format!(
                "action {action} outside {} choices",
                probs.len()
            )));
        }
        let zeta = self.policy.inverse_temperature;
        let upstream: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(b, p)| zeta * (if b == action { 1.0 } else { 0.0 } - p))
            .collect();
        Ok(pqc_backward(&self.pqc, &self.policy, features, &upstream)?.to_flat())
    }
}
