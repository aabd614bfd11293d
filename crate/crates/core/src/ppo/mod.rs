//! PPO with classical, hybrid quantum-classical and random actors.

pub mod actor;
pub mod buffer;
pub mod gae;
pub mod gaussian;
pub mod losses;
pub mod trainer;

pub use actor::{
    sequence_shape, AgentConfig, AgentKind, Critic, GaussianActor, HybridNet, PolicyBody,
    SoftmaxPqcPolicy,
};
pub use buffer::{RolloutBuffer, Transition};
pub use gae::{clip_ratio, compute_gae, compute_gae_terminal, normalize_advantages};
pub use gaussian::{gaussian_entropy, gaussian_log_prob, gaussian_sample_logprob};
pub use losses::{ppo_losses, LossGradients, LossReport, Minibatch, PpoHyper};
pub use trainer::{
    evaluate, train, Agent, EvalReport, IterationMetrics, Learner, Summary, TrainOutcome,
    TrainSettings,
};
