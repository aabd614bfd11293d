//! Built-in experiment profiles, mirrored by `configs/*.toml`.

use std::path::PathBuf;

use super::config::{ChannelSection, EnvSection, ExperimentConfig, GeometrySection, RunSection};
use crate::ppo::{AgentConfig, AgentKind, PpoHyper};

const WAVELENGTH: f64 = 10.7e-3;

fn geometry(num_layers: usize, atoms_per_layer: usize, num_antennas: usize, num_users: usize) -> GeometrySection {
    GeometrySection {
        num_layers,
        atoms_per_layer,
        num_antennas,
        num_users,
        wavelength: WAVELENGTH,
        atom_spacing: WAVELENGTH / 2.0,
        total_thickness: 5.0 * WAVELENGTH,
        // λ²/4 written out so the TOML files carry the same literal.
        atom_area: 2.862_25e-5,
    }
}

fn channel() -> ChannelSection {
    ChannelSection {
        rician_factor_db: -30.0,
        ref_path_loss_db: -35.0,
        path_loss_exponent: 3.5,
        noise_power_user_dbm: -104.0,
        noise_power_eve_dbm: -104.0,
        csi_uncertainty: 0.1,
    }
}

fn env(r_min: f64) -> EnvSection {
    EnvSection {
        horizon: 20,
        p0_dbm: 10.0,
        r_min,
        min_distance: 75.0,
        max_distance: 100.0,
        bs_height: 10.0,
    }
}

/// Small system that trains all three agents in minutes on one core.
pub fn desk(kind: AgentKind) -> ExperimentConfig {
    let mut agent = AgentConfig::paper(kind);
    agent.hidden = vec![64; 4];
    agent.qubits = 4;
    agent.pqc_layers = 3;
    agent.init_log_std = -1.5;
    ExperimentConfig {
        geometry: geometry(2, 9, 2, 2),
        channel: channel(),
        env: env(0.01),
        agent,
        ppo: PpoHyper::default(),
        run: RunSection {
            seed: 0,
            total_steps: 51_200,
            eval_episodes: 100,
            eval_seed: 12_345,
            output_dir: PathBuf::from("runs/desk"),
        },
    }
}

/// Full-size system and networks. Slow: hours per run on a laptop.
pub fn paper(kind: AgentKind) -> ExperimentConfig {
    let mut agent = AgentConfig::paper(kind);
    agent.pqc_layers = 4;
    agent.init_log_std = -1.5;
    ExperimentConfig {
        geometry: geometry(3, 25, 4, 3),
        channel: channel(),
        env: env(0.1),
        agent,
        ppo: PpoHyper::default(),
        run: RunSection {
            seed: 0,
            total_steps: 40_960,
            eval_episodes: 100,
            eval_seed: 12_345,
            output_dir: PathBuf::from("runs/paper"),
        },
    }
}
