//! Small differentiable networks and their optimizer.

pub mod checkpoint;
pub mod network;
pub mod optim;

pub use checkpoint::{Checkpoint, Tensor, CHECKPOINT_FORMAT};
pub use network::{Activation, ForwardCache, LayerSpec, Network, Shape};
pub use optim::{clip_global_norm, global_norm, Adam};
