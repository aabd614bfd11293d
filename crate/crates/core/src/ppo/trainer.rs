//! Rollout collection, PPO updates, checkpoints and deterministic evaluation.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::actor::{AgentConfig, AgentKind, Critic, GaussianActor};
use super::buffer::{RolloutBuffer, Transition};
use super::gae::normalize_advantages;
use super::gaussian::{clamp_log_std, gaussian_sample_logprob};
use super::losses::{ppo_losses, LossReport, Minibatch, PpoHyper};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::neural::{clip_global_norm, Adam, Checkpoint};

/// Independent RNG stream `k` derived from a run seed.
pub(crate) fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

const STREAM_INIT: u64 = 1;
const STREAM_EPISODES: u64 = 2;
const STREAM_ACTIONS: u64 = 3;
const STREAM_SHUFFLE: u64 = 4;
const STREAM_EVAL_EPISODES: u64 = 5;
const STREAM_EVAL_ACTIONS: u64 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub config: AgentConfig,
    pub actor: GaussianActor,
    pub critic: Critic,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Learner(Box<Learner>),
    Random { obs_dim: usize, action_dim: usize },
}

impl Agent {
    pub fn new(
        obs_dim: usize,
        action_dim: usize,
        cfg: &AgentConfig,
        lr: f64,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if cfg.kind == AgentKind::Random {
            return Ok(Agent::Random {
                obs_dim,
                action_dim,
            });
        }
        let mut rng = stream(seed, STREAM_INIT);
        let actor = GaussianActor::new(obs_dim, action_dim, cfg, &mut rng)?;
        let critic = Critic::new(obs_dim, &cfg.hidden, &mut rng)?;
        let actor_opt = Adam::new(actor.num_params(), lr);
        let critic_opt = Adam::new(critic.net.num_params(), lr);
        Ok(Agent::Learner(Box::new(Learner {
            config: cfg.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
        })))
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Learner(l) => l.config.kind,
            Agent::Random { .. } => AgentKind::Random,
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            Agent::Learner(l) => (l.actor.obs_dim(), l.actor.action_dim()),
            Agent::Random {
                obs_dim,
                action_dim,
            } => (*obs_dim, *action_dim),
        }
    }

    /// Mean action for learners, a fresh random draw for the baseline.
    pub fn act_deterministic(
        &self,
        obs: &[f64],
        env: &dyn Environment,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        match self {
            Agent::Learner(l) => Ok(l.actor.mean(obs, 1)?.0),
            Agent::Random { .. } => Ok(env.random_action(rng)),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        let (obs_dim, action_dim) = self.dims();
        ck.meta.insert("kind".into(), self.kind().name().into());
        ck.meta.insert("obs_dim".into(), obs_dim.into());
        ck.meta.insert("action_dim".into(), action_dim.into());
        if let Agent::Learner(l) = self {
            ck.meta.insert(
                "agent".into(),
                serde_json::to_value(&l.config).expect("agent config serializes"),
            );
            ck.insert("actor", l.actor.params());
            ck.insert("critic", l.critic.net.params().to_vec());
            for (name, opt) in [("actor_opt", &l.actor_opt), ("critic_opt", &l.critic_opt)] {
                ck.insert(&format!("{name}.m"), opt.first_moment.clone());
                ck.insert(&format!("{name}.v"), opt.second_moment.clone());
                ck.insert(
                    &format!("{name}.hyper"),
                    vec![opt.lr, opt.beta1, opt.beta2, opt.eps],
                );
                ck.meta.insert(format!("{name}.step"), opt.step_count.into());
            }
        }
        ck
    }

    /// Rebuilds an agent, checking it fits an environment with the given dimensions.
    pub fn from_checkpoint(ck: &Checkpoint, obs_dim: usize, action_dim: usize) -> Result<Self> {
        let meta_usize = |key: &str| -> Result<usize> {
            ck.meta
                .get(key)
                .and_then(|v| v.as_u64())
                .map(|v| v as usize)
                .ok_or_else(|| Error::Checkpoint(format!("missing `{key}`")))
        };
        let (co, ca) = (meta_usize("obs_dim")?, meta_usize("action_dim")?);
        if (co, ca) != (obs_dim, action_dim) {
            return Err(Error::shape(format!(
                "checkpoint was trained for obs/action dims {co}/{ca}, environment has {obs_dim}/{action_dim}"
            )));
        }
        let kind: AgentKind = ck
            .meta
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Checkpoint("missing `kind`".into()))?
            .parse()
            .map_err(|_| Error::Checkpoint("unknown agent kind".into()))?;
        if kind == AgentKind::Random {
            return Ok(Agent::Random {
                obs_dim,
                action_dim,
            });
        }
        let config: AgentConfig = serde_json::from_value(
            ck.meta
                .get("agent")
                .cloned()
                .ok_or_else(|| Error::Checkpoint("missing `agent`".into()))?,
        )
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut agent = Agent::new(obs_dim, action_dim, &config, 1.0, 0)?;
        let Agent::Learner(l) = &mut agent else {
            unreachable!("non-random kinds build learners")
        };
        l.actor
            .set_params(ck.tensor("actor")?)
            .map_err(|e| Error::shape(format!("actor: {e}")))?;
        l.critic
            .net
            .set_params(ck.tensor("critic")?)
            .map_err(|e| Error::shape(format!("critic: {e}")))?;
        for (name, opt) in [("actor_opt", &mut l.actor_opt), ("critic_opt", &mut l.critic_opt)] {
            let m = ck.tensor(&format!("{name}.m"))?;
            let v = ck.tensor(&format!("{name}.v"))?;
            let h = ck.tensor(&format!("{name}.hyper"))?;
            if m.len() != opt.first_moment.len() || v.len() != m.len() || h.len() != 4 {
                return Err(Error::shape(format!("{name} state has the wrong size")));
            }
            opt.first_moment.copy_from_slice(m);
            opt.second_moment.copy_from_slice(v);
            (opt.lr, opt.beta1, opt.beta2, opt.eps) = (h[0], h[1], h[2], h[3]);
            opt.step_count = ck
                .meta
                .get(&format!("{name}.step"))
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::Checkpoint(format!("missing `{name}.step`")))?;
        }
        Ok(agent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub agent: AgentConfig,
    pub hyper: PpoHyper,
    pub total_steps: usize,
    pub seed: u64,
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub env_steps: usize,
    pub mean_asr: f64,
    pub mean_reward: f64,
    pub jain: f64,
    pub qos_violation_rate: f64,
    pub surrogate_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub metrics: Vec<IterationMetrics>,
}

struct Rollout<'a, E: Environment> {
    env: &'a mut E,
    episode_seeds: ChaCha8Rng,
    obs: Option<Vec<f64>>,
    obs_value: f64,
}

impl<E: Environment> Rollout<'_, E> {
    fn current(&mut self) -> Vec<f64> {
        if self.obs.is_none() {
            let seed = self.episode_seeds.next_u64();
            self.obs = Some(self.env.reset(seed));
            self.obs_value = f64::NAN;
        }
        self.obs.clone().unwrap()
    }
}

/// Runs `total_steps / batch_steps` collect-then-update iterations.
///
/// Episodes end only at the horizon, which is a time limit rather than a
/// terminal state, so the value of the final observation is bootstrapped.
pub fn train<E: Environment>(
    env: &mut E,
    settings: &TrainSettings,
    mut on_iteration: impl FnMut(&IterationMetrics),
) -> Result<TrainOutcome> {
    let hyper = &settings.hyper;
    hyper.validate()?;
    let iterations = settings.total_steps / hyper.batch_steps;
    if iterations == 0 {
        return Err(Error::config(
            "run.total_steps",
            format!("must be at least ppo.batch_steps ({})", hyper.batch_steps),
        ));
    }
    let (obs_dim, action_dim) = (env.observation_dim(), env.action_dim());
    let mut agent = Agent::new(obs_dim, action_dim, &settings.agent, hyper.lr, settings.seed)?;
    let mut action_rng = stream(settings.seed, STREAM_ACTIONS);
    let mut shuffle_rng = stream(settings.seed, STREAM_SHUFFLE);
    let mut rollout = Rollout {
        env,
        episode_seeds: stream(settings.seed, STREAM_EPISODES),
        obs: None,
        obs_value: f64::NAN,
    };
    let start = Instant::now();
    let mut metrics = Vec::with_capacity(iterations);
    let mut buffer = RolloutBuffer::new(obs_dim, action_dim);

    for iteration in 0..iterations {
        buffer.clear();
        let mut asr_sum = 0.0;
        let mut jain_sum = 0.0;
        let mut violations = 0usize;
        for _ in 0..hyper.batch_steps {
            let obs = rollout.current();
            let (action, log_prob, value) = match &agent {
                Agent::Learner(l) => {
                    let (mean, _) = l.actor.mean(&obs, 1)?;
                    let (a, lp) = gaussian_sample_logprob(&mean, &l.actor.log_std, &mut action_rng);
                    let v = if rollout.obs_value.is_nan() {
                        l.critic.value(&obs)?
                    } else {
                        rollout.obs_value
                    };
                    (a, lp, v)
                }
                Agent::Random { .. } => (rollout.env.random_action(&mut action_rng), 0.0, 0.0),
            };
            let step = rollout.env.step(&action)?;
            let next_value = match &agent {
                Agent::Learner(l) => l.critic.value(&step.observation)?,
                Agent::Random { .. } => 0.0,
            };
            match step.metrics {
                Some(m) => {
                    asr_sum += m.asr;
                    jain_sum += m.jain;
                    violations += usize::from(!m.qos_ok);
                }
                None => {
                    asr_sum += step.reward;
                    jain_sum += 1.0;
                }
            }
            buffer.push(Transition {
                state: &obs,
                action: &action,
                log_prob,
                reward: step.reward,
                value,
                next_value,
                done: step.done,
            })?;
            if step.done {
                rollout.obs = None;
            } else {
                rollout.obs = Some(step.observation);
                rollout.obs_value = next_value;
            }
        }

        let losses = match &mut agent {
            Agent::Learner(l) => update(l, &mut buffer, hyper, &mut shuffle_rng)?,
            Agent::Random { .. } => LossReport::default(),
        };
        let n = buffer.len() as f64;
        let row = IterationMetrics {
            iteration,
            env_steps: (iteration + 1) * hyper.batch_steps,
            mean_asr: asr_sum / n,
            mean_reward: buffer.rewards.iter().sum::<f64>() / n,
            jain: jain_sum / n,
            qos_violation_rate: violations as f64 / n,
            surrogate_loss: losses.surrogate,
            value_loss: losses.value_loss,
            entropy: losses.entropy,
            clip_fraction: losses.clip_fraction,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        on_iteration(&row);
        metrics.push(row);
    }
    Ok(TrainOutcome { agent, metrics })
}

/// K epochs of shuffled minibatch updates; returns losses averaged over all minibatches.
fn update(
    l: &mut Learner,
    buffer: &mut RolloutBuffer,
    hyper: &PpoHyper,
    rng: &mut ChaCha8Rng,
) -> Result<LossReport> {
    buffer.compute_gae(hyper.discount, hyper.gae_lambda)?;
    let adv = buffer.advantages.as_ref().unwrap();
    let ret = buffer.returns.as_ref().unwrap();
    let (od, ad) = (buffer.obs_dim, buffer.action_dim);
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut sum = LossReport::default();
    let mut count = 0usize;
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut old_lp = Vec::new();
    let mut mb_adv = Vec::new();
    let mut mb_ret = Vec::new();
    for _ in 0..hyper.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(hyper.minibatch) {
            states.clear();
            actions.clear();
            old_lp.clear();
            mb_adv.clear();
            mb_ret.clear();
            for &i in chunk {
                states.extend_from_slice(&buffer.states[i * od..(i + 1) * od]);
                actions.extend_from_slice(&buffer.actions[i * ad..(i + 1) * ad]);
                old_lp.push(buffer.log_probs[i]);
                mb_adv.push(adv[i]);
                mb_ret.push(ret[i]);
            }
            let normalized = normalize_advantages(&mb_adv);
            let mb = Minibatch {
                states: &states,
                actions: &actions,
                old_log_probs: &old_lp,
                advantages: &normalized,
                returns: &mb_ret,
            };
            let mut g = ppo_losses(&mb, &l.actor, &l.critic, hyper)?;
            if g.actor.iter().chain(&g.critic).any(|v| !v.is_finite()) {
                return Err(Error::Numerical("non-finite gradient in PPO update".into()));
            }
            clip_global_norm(&mut g.actor, hyper.max_grad_norm);
            clip_global_norm(&mut g.critic, hyper.max_grad_norm);
            let mut p = l.actor.params();
            l.actor_opt.step(&mut p, &g.actor)?;
            for v in &mut p[l.actor.body_params()..] {
                *v = clamp_log_std(*v);
            }
            l.actor.set_params(&p)?;
            l.critic_opt.step(l.critic.net.params_mut(), &g.critic)?;
            sum.surrogate += g.report.surrogate;
            sum.value_loss += g.report.value_loss;
            sum.entropy += g.report.entropy;
            sum.total += g.report.total;
            sum.clip_fraction += g.report.clip_fraction;
            count += 1;
        }
    }
    let c = count as f64;
    Ok(LossReport {
        surrogate: sum.surrogate / c,
        value_loss: sum.value_loss / c,
        entropy: sum.entropy / c,
        total: sum.total / c,
        clip_fraction: sum.clip_fraction / c,
    })
}

/// Mean with a normal-approximation 95% interval over episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
    /// Set when fewer than two samples make the interval meaningless.
    pub degenerate: bool,
}

impl Summary {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
        if n < 2 {
            return Self {
                mean,
                ci95: 0.0,
                n,
                degenerate: true,
            };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            ci95: 1.96 * (var / n as f64).sqrt(),
            n,
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub agent: AgentKind,
    pub episodes: usize,
    pub eval_seed: u64,
    /// Per-episode mean ASR (bits/s/Hz).
    pub asr: Summary,
    pub reward: Summary,
    pub jain: Summary,
    /// Fraction of steps meeting every user's minimum rate.
    pub qos_rate: Summary,
}

/// Plays `episodes` fresh episodes with the deterministic policy.
pub fn evaluate<E: Environment>(
    env: &mut E,
    agent: &Agent,
    episodes: usize,
    eval_seed: u64,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::config("run.eval_episodes", "must be at least 1"));
    }
    let (od, ad) = agent.dims();
    if (od, ad) != (env.observation_dim(), env.action_dim()) {
        return Err(Error::shape("agent does not match the environment dimensions"));
    }
    let mut seeds = stream(eval_seed, STREAM_EVAL_EPISODES);
    let mut rng = stream(eval_seed, STREAM_EVAL_ACTIONS);
    let mut asr = Vec::with_capacity(episodes);
    let mut reward = Vec::with_capacity(episodes);
    let mut jain = Vec::with_capacity(episodes);
    let mut qos = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(seeds.next_u64());
        let (mut a_sum, mut r_sum, mut j_sum, mut q_sum, mut steps) = (0.0, 0.0, 0.0, 0.0, 0usize);
        loop {
            let action = agent.act_deterministic(&obs, &*env, &mut rng)?;
            let step = env.step(&action)?;
            r_sum += step.reward;
            match step.metrics {
                Some(m) => {
                    a_sum += m.asr;
                    j_sum += m.jain;
                    q_sum += f64::from(u8::from(m.qos_ok));
                }
                None => {
                    a_sum += step.reward;
                    j_sum += 1.0;
                    q_sum += 1.0;
                }
            }
            steps += 1;
            if step.done {
                break;
            }
            obs = step.observation;
        }
        let s = steps as f64;
        asr.push(a_sum / s);
        reward.push(r_sum / s);
        jain.push(j_sum / s);
        qos.push(q_sum / s);
    }
    Ok(EvalReport {
        agent: agent.kind(),
        episodes,
        eval_seed,
        asr: Summary::of(&asr),
        reward: Summary::of(&reward),
        jain: Summary::of(&jain),
        qos_rate: Summary::of(&qos),
    })
}
