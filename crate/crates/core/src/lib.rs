//! Simulation and learning stack for secure downlink transmission through a
//! stacked intelligent metasurface, with classical and hybrid
//! quantum-classical PPO agents.

pub mod channel;
pub mod env;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod neural;
pub mod ppo;
pub mod quantum;
pub mod secrecy;
pub mod toy;

pub use error::{Error, Result};
