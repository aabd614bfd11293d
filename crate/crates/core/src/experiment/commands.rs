//! Train, eval, sweep and plot-data commands.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::metrics::{plot_table, read_metrics_file, MetricsWriter, METRICS_SCHEMA};
use crate::env::SecrecyEnv;
use crate::error::{Error, Result};
use crate::neural::{Checkpoint, CHECKPOINT_FORMAT};
use crate::ppo::{evaluate, train, Agent, AgentKind, EvalReport, IterationMetrics};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const RUN_FILE: &str = "run.json";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub agent: AgentKind,
    pub metrics: Vec<IterationMetrics>,
    pub output_dir: PathBuf,
}

impl TrainReport {
    pub fn metrics_path(&self) -> PathBuf {
        self.output_dir.join(METRICS_FILE)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.output_dir.join(CHECKPOINT_FILE)
    }

    pub fn summary_line(&self) -> String {
        let last = self.metrics.last();
        format!(
            "trained {} agent for {} steps ({} iterations): final mean_asr {:.4} bits/s/Hz; outputs in {}",
            self.agent.name(),
            last.map_or(0, |m| m.env_steps),
            self.metrics.len(),
            last.map_or(0.0, |m| m.mean_asr),
            self.output_dir.display()
        )
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    metrics_schema: &'a str,
    checkpoint_format: &'a str,
    agent: &'a str,
    seed: u64,
    iterations: usize,
    config: &'a ExperimentConfig,
}

/// Trains the configured agent and writes metrics, checkpoint and run record.
pub fn cmd_train(
    config: &ExperimentConfig,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<TrainReport> {
    let mut cfg = config.clone();
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(dir) = out {
        cfg.run.output_dir = dir.to_path_buf();
    }
    cfg.validate()?;
    let dir = cfg.run.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut env = SecrecyEnv::new(cfg.env_config()?)?;
    let mut writer = MetricsWriter::new(BufWriter::new(File::create(dir.join(METRICS_FILE))?))?;
    let mut write_err = None;
    let outcome = train(&mut env, &cfg.train_settings(), |row| {
        if write_err.is_none() {
            write_err = writer.push(row).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    outcome.agent.to_checkpoint().save(&dir.join(CHECKPOINT_FILE))?;
    let record = RunRecord {
        metrics_schema: METRICS_SCHEMA,
        checkpoint_format: CHECKPOINT_FORMAT,
        agent: cfg.agent.kind.name(),
        seed: cfg.run.seed,
        iterations: outcome.metrics.len(),
        config: &cfg,
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| Error::Io(e.into()))?;
    fs::write(dir.join(RUN_FILE), json)?;
    Ok(TrainReport {
        agent: cfg.agent.kind,
        metrics: outcome.metrics,
        output_dir: dir,
    })
}

/// Deterministic-policy evaluation of a saved checkpoint.
pub fn cmd_eval(config: &ExperimentConfig, checkpoint: &Path, episodes: usize) -> Result<EvalReport> {
    config.validate()?;
    let mut env = SecrecyEnv::new(config.env_config()?)?;
    let ck = Checkpoint::load(checkpoint)?;
    let agent = Agent::from_checkpoint(&ck, env.state_dim(), env.action_len())?;
    evaluate(&mut env, &agent, episodes, config.run.eval_seed)
}

pub fn format_eval(report: &EvalReport) -> String {
    let mut s = format!(
        "agent {}: {} episodes (eval seed {})\n",
        report.agent.name(),
        report.episodes,
        report.eval_seed
    );
    for (name, v) in [
        ("asr", report.asr),
        ("reward", report.reward),
        ("jain", report.jain),
        ("qos_rate", report.qos_rate),
    ] {
        s += &format!("{name:>9}: {:.6} ± {:.6}\n", v.mean, v.ci95);
    }
    if report.asr.degenerate {
        s += "note: single episode, confidence interval is degenerate\n";
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    AtomsPerLayer,
    Layers,
    Power,
    MinRate,
    Users,
    Distance,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(SweepAxis::AtomsPerLayer),
            "L" => Ok(SweepAxis::Layers),
            "P0" => Ok(SweepAxis::Power),
            "R_min" => Ok(SweepAxis::MinRate),
            "M" => Ok(SweepAxis::Users),
            "distance" => Ok(SweepAxis::Distance),
            _ => Err(Error::config(
                "axis",
                format!("unknown axis `{s}` (expected N, L, P0, R_min, M or distance)"),
            )),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::AtomsPerLayer => "N",
            SweepAxis::Layers => "L",
            SweepAxis::Power => "P0",
            SweepAxis::MinRate => "R_min",
            SweepAxis::Users => "M",
            SweepAxis::Distance => "distance",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepAxis::AtomsPerLayer | SweepAxis::Layers | SweepAxis::Users)
    }

    /// Copy of `base` with this axis set to `value`.
    ///
    /// `distance` moves the annulus so its outer radius is `value` with a
    /// fixed 25 m width; `M` grows the antenna count when needed.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        if !value.is_finite() {
            return Err(Error::domain(format!("{}: value must be finite", self.name())));
        }
        let count = || -> Result<usize> {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::domain(format!(
                    "{}: {value} is not a positive integer",
                    self.name()
                )));
            }
            Ok(value as usize)
        };
        let mut cfg = base.clone();
        match self {
            SweepAxis::AtomsPerLayer => cfg.geometry.atoms_per_layer = count()?,
            SweepAxis::Layers => cfg.geometry.num_layers = count()?,
            SweepAxis::Power => cfg.env.p0_dbm = value,
            SweepAxis::MinRate => cfg.env.r_min = value,
            SweepAxis::Users => {
                cfg.geometry.num_users = count()?;
                cfg.geometry.num_antennas = cfg.geometry.num_antennas.max(cfg.geometry.num_users);
            }
            SweepAxis::Distance => {
                cfg.env.max_distance = value;
                cfg.env.min_distance = value - 25.0;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub agent: String,
    pub status: String,
    pub eval_asr: Option<f64>,
    pub eval_asr_ci95: Option<f64>,
    pub eval_jain: Option<f64>,
    pub eval_qos_rate: Option<f64>,
    pub final_train_asr: Option<f64>,
    pub message: String,
}

fn sweep_point(cfg: &ExperimentConfig, kind: AgentKind) -> Result<(EvalReport, f64)> {
    let mut cfg = cfg.clone();
    cfg.agent.kind = kind;
    let mut env = SecrecyEnv::new(cfg.env_config()?)?;
    let outcome = train(&mut env, &cfg.train_settings(), |_| {})?;
    let report = evaluate(&mut env, &outcome.agent, cfg.run.eval_episodes, cfg.run.eval_seed)?;
    let last = outcome.metrics.last().map_or(0.0, |m| m.mean_asr);
    Ok((report, last))
}

/// Trains and evaluates every agent kind at each axis value; failures become rows.
pub fn cmd_sweep(
    base: &ExperimentConfig,
    axis: &str,
    values: &[String],
    out: Option<&Path>,
    mut progress: impl FnMut(&SweepRow),
) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let axis: SweepAxis = axis.parse()?;
    if values.is_empty() {
        return Err(Error::config("values", "at least one value is required"));
    }
    let parsed = values
        .iter()
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("values", format!("`{v}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if axis.integral() {
        if let Some(v) = parsed.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
            return Err(Error::config(
                "values",
                format!("axis {} takes positive integers, got {v}", axis.name()),
            ));
        }
    }
    let dir = out.map_or_else(|| base.run.output_dir.clone(), Path::to_path_buf);
    fs::create_dir_all(&dir)?;
    let mut writer = csv::Writer::from_path(dir.join(SWEEP_FILE))?;
    let mut rows = Vec::new();
    for &value in &parsed {
        let point = axis.apply(base, value);
        for kind in AgentKind::ALL {
            let result = point.as_ref().map_err(clone_err).and_then(|c| sweep_point(c, kind));
            let row = match result {
                Ok((r, last)) => SweepRow {
                    axis: axis.name().into(),
                    value,
                    agent: kind.name().into(),
                    status: "ok".into(),
                    eval_asr: Some(r.asr.mean),
                    eval_asr_ci95: Some(r.asr.ci95),
                    eval_jain: Some(r.jain.mean),
                    eval_qos_rate: Some(r.qos_rate.mean),
                    final_train_asr: Some(last),
                    message: String::new(),
                },
                Err(e) => SweepRow {
                    axis: axis.name().into(),
                    value,
                    agent: kind.name().into(),
                    status: "error".into(),
                    eval_asr: None,
                    eval_asr_ci95: None,
                    eval_jain: None,
                    eval_qos_rate: None,
                    final_train_asr: None,
                    message: e.to_string(),
                },
            };
            writer.serialize(&row)?;
            writer.flush()?;
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn clone_err(e: &Error) -> Error {
    Error::InputDomain(e.to_string())
}

/// Smoothed learning curves from one or more metrics files, as CSV text.
pub fn cmd_plotdata(paths: &[PathBuf], window: usize) -> Result<String> {
    if paths.is_empty() {
        return Err(Error::config("paths", "at least one metrics file is required"));
    }
    let runs = paths
        .iter()
        .map(|p| Ok((p.display().to_string(), read_metrics_file(p)?)))
        .collect::<Result<Vec<_>>>()?;
    plot_table(&runs, window)
}
