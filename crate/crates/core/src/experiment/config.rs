//! TOML experiment configuration.
//!
//! Power-like quantities are written in dB/dBm and converted to linear
//! scale when the environment config is built during validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, dbm_to_watts, ChannelParams};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::geometry::SimGeometry;
use crate::ppo::{AgentConfig, PpoHyper, TrainSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub num_layers: usize,
    pub atoms_per_layer: usize,
    pub num_antennas: usize,
    pub num_users: usize,
    /// Meters.
    pub wavelength: f64,
    pub atom_spacing: f64,
    pub total_thickness: f64,
    /// Square meters.
    pub atom_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub rician_factor_db: f64,
    pub ref_path_loss_db: f64,
    pub path_loss_exponent: f64,
    pub noise_power_user_dbm: f64,
    pub noise_power_eve_dbm: f64,
    pub csi_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub horizon: usize,
    pub p0_dbm: f64,
    /// Minimum per-user rate, bits/s/Hz.
    pub r_min: f64,
    /// Horizontal placement annulus, meters.
    pub min_distance: f64,
    pub max_distance: f64,
    pub bs_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub total_steps: usize,
    pub eval_episodes: usize,
    pub eval_seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySection,
    pub channel: ChannelSection,
    pub env: EnvSection,
    pub agent: AgentConfig,
    #[serde(default)]
    pub ppo: PpoHyper,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::ConfigParse(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Cross-field checks run before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.env_config()?.validate()?;
        self.agent.validate()?;
        self.ppo.validate()?;
        if self.run.total_steps < self.ppo.batch_steps {
            return Err(Error::config(
                "run.total_steps",
                format!("must be at least ppo.batch_steps ({})", self.ppo.batch_steps),
            ));
        }
        if self.run.eval_episodes == 0 {
            return Err(Error::config("run.eval_episodes", "must be at least 1"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> SimGeometry {
        let g = &self.geometry;
        SimGeometry {
            num_layers: g.num_layers,
            atoms_per_layer: g.atoms_per_layer,
            num_antennas: g.num_antennas,
            num_users: g.num_users,
            atom_spacing: g.atom_spacing,
            wavelength: g.wavelength,
            total_thickness: g.total_thickness,
            atom_area: g.atom_area,
        }
    }

    /// Linear-scale environment parameters.
    pub fn env_config(&self) -> Result<EnvConfig> {
        let c = &self.channel;
        let finite = [
            ("channel.rician_factor_db", c.rician_factor_db),
            ("channel.ref_path_loss_db", c.ref_path_loss_db),
            ("channel.noise_power_user_dbm", c.noise_power_user_dbm),
            ("channel.noise_power_eve_dbm", c.noise_power_eve_dbm),
            ("env.p0_dbm", self.env.p0_dbm),
        ];
        if let Some((field, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::config(*field, "must be finite"));
        }
        let cfg = EnvConfig {
            geometry: self.geometry(),
            channel: ChannelParams {
                rician_factor: db_to_linear(c.rician_factor_db),
                ref_path_loss: db_to_linear(c.ref_path_loss_db),
                path_loss_exponent: c.path_loss_exponent,
                noise_power_user: dbm_to_watts(c.noise_power_user_dbm),
                noise_power_eve: dbm_to_watts(c.noise_power_eve_dbm),
                csi_uncertainty: c.csi_uncertainty,
            },
            horizon: self.env.horizon,
            p0: dbm_to_watts(self.env.p0_dbm),
            min_rate: self.env.r_min,
            min_distance: self.env.min_distance,
            max_distance: self.env.max_distance,
            bs_height: self.env.bs_height,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_settings(&self) -> TrainSettings {
        TrainSettings {
            agent: self.agent.clone(),
            hyper: self.ppo,
            total_steps: self.run.total_steps,
            seed: self.run.seed,
        }
    }
}
