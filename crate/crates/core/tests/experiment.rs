use std::path::{Path, PathBuf};

use simsec::env::SecrecyEnv;
use simsec::error::Error;
use simsec::experiment::{
    cmd_eval, cmd_plotdata, cmd_sweep, cmd_train, format_eval, profiles, read_metrics_file,
    write_metrics, ExperimentConfig,
};
use simsec::ppo::{evaluate, train, AgentKind, IterationMetrics};

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// A config that trains every agent kind in well under a second.
fn tiny(kind: AgentKind) -> ExperimentConfig {
    let mut cfg = profiles::desk(kind);
    cfg.geometry.atoms_per_layer = 4;
    cfg.geometry.num_layers = 1;
    cfg.agent.hidden = vec![8];
    cfg.agent.qubits = 2;
    cfg.agent.pqc_layers = 1;
    cfg.agent.pre_filters = 4;
    cfg.agent.pre_dense = 4;
    cfg.agent.post_hidden = vec![4];
    cfg.ppo.batch_steps = 64;
    cfg.ppo.minibatch = 32;
    cfg.ppo.epochs = 1;
    cfg.run.total_steps = 128;
    cfg.run.eval_episodes = 2;
    cfg
}

fn strip_timing(mut rows: Vec<IterationMetrics>) -> Vec<IterationMetrics> {
    rows.iter_mut().for_each(|r| r.wall_seconds = 0.0);
    rows
}

#[test]
fn shipped_configs_match_profiles() {
    let desk = ExperimentConfig::load(&config_dir().join("desk.toml")).unwrap();
    assert_eq!(desk, profiles::desk(desk.agent.kind));
    let paper = ExperimentConfig::load(&config_dir().join("paper.toml")).unwrap();
    assert_eq!(paper, profiles::paper(paper.agent.kind));
}

#[test]
fn config_round_trips_through_text() {
    for kind in AgentKind::ALL {
        for cfg in [profiles::desk(kind), profiles::paper(kind), tiny(kind)] {
            let text = cfg.to_toml_string().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }
}

#[test]
fn decibel_fields_become_linear() {
    let env = profiles::desk(AgentKind::Classical).env_config().unwrap();
    assert!((env.p0 - 0.01).abs() < 1e-15);
    let noise = 10f64.powf(-104.0 / 10.0) * 1e-3;
    assert!((env.channel.noise_power_user / noise - 1.0).abs() < 1e-12);
}

#[test]
fn missing_field_is_named() {
    let text = profiles::desk(AgentKind::Classical).to_toml_string().unwrap();
    let without: String = text
        .lines()
        .filter(|l| !l.starts_with("atoms_per_layer"))
        .map(|l| format!("{l}\n"))
        .collect();
    let err = ExperimentConfig::from_toml_str(&without).unwrap_err();
    assert!(err.is_usage());
    assert!(err.to_string().contains("atoms_per_layer"), "{err}");
}

#[test]
fn cross_field_constraints_are_checked() {
    let base = tiny(AgentKind::Classical);
    let mut bad = Vec::new();
    let mut c = base.clone();
    c.geometry.num_users = 3;
    bad.push(c);
    let mut c = base.clone();
    c.geometry.atoms_per_layer = 5;
    bad.push(c);
    let mut c = base.clone();
    c.agent.qubits = 13;
    bad.push(c);
    let mut c = base.clone();
    c.run.total_steps = 10;
    bad.push(c);
    let mut c = base.clone();
    c.run.eval_episodes = 0;
    bad.push(c);
    for c in bad {
        let err = c.validate().unwrap_err();
        assert!(err.is_usage(), "{err}");
        let text = c.to_toml_string().unwrap();
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }
}

#[test]
fn train_writes_rows_checkpoint_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(AgentKind::Classical);
    cfg.run.total_steps = 192;
    let rep = cmd_train(&cfg, Some(3), Some(dir.path())).unwrap();
    assert_eq!(rep.metrics.len(), 3);
    let rows = read_metrics_file(&rep.metrics_path()).unwrap();
    assert_eq!(rows, rep.metrics);
    assert!(rows.windows(2).all(|w| w[0].env_steps < w[1].env_steps));
    assert!(dir.path().join("run.json").exists());
    assert!(rep.summary_line().contains("classical"));

    let again = cmd_train(&cfg, Some(3), Some(dir.path())).unwrap();
    assert_eq!(strip_timing(again.metrics), strip_timing(rows));

    let eval = cmd_eval(&cfg, &rep.checkpoint_path(), 3).unwrap();
    assert_eq!(eval, cmd_eval(&cfg, &rep.checkpoint_path(), 3).unwrap());
    assert!(!format_eval(&eval).contains("degenerate"));
    let single = cmd_eval(&cfg, &rep.checkpoint_path(), 1).unwrap();
    assert!(format_eval(&single).contains("degenerate"));

    let mut other = cfg.clone();
    other.geometry.atoms_per_layer = 9;
    let err = cmd_eval(&other, &rep.checkpoint_path(), 1).unwrap_err();
    assert!(matches!(err, Error::Structural(_)), "{err}");
}

#[test]
fn single_user_asr_grows_with_power_for_a_fixed_policy() {
    let mut medians = Vec::new();
    let powers = [-10.0, 0.0, 10.0, 20.0, 30.0];
    let mut per_seed = vec![Vec::new(); 3];
    for (seed, out) in per_seed.iter_mut().enumerate() {
        let mut cfg = tiny(AgentKind::Classical);
        cfg.geometry.num_users = 1;
        cfg.geometry.num_antennas = 1;
        cfg.env.r_min = 0.0;
        cfg.run.total_steps = 256;
        cfg.run.seed = seed as u64;
        let mut env = SecrecyEnv::new(cfg.env_config().unwrap()).unwrap();
        let agent = train(&mut env, &cfg.train_settings(), |_| {}).unwrap().agent;
        for p in powers {
            let mut c = cfg.clone();
            c.env.p0_dbm = p;
            let mut env = SecrecyEnv::new(c.env_config().unwrap()).unwrap();
            out.push(evaluate(&mut env, &agent, 5, 7).unwrap().asr.mean);
        }
    }
    for k in 0..powers.len() {
        let mut v: Vec<f64> = per_seed.iter().map(|s| s[k]).collect();
        v.sort_by(f64::total_cmp);
        medians.push(v[1]);
    }
    assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{medians:?}");
    assert!(medians[powers.len() - 1] > medians[0]);
}

#[test]
fn sweep_reports_one_row_per_value_and_agent() {
    let dir = tempfile::tempdir().unwrap();
    let base = tiny(AgentKind::Classical);
    let mut seen = 0;
    let rows = cmd_sweep(&base, "L", &["1".into(), "2".into()], Some(dir.path()), |_| seen += 1).unwrap();
    assert_eq!(rows.len(), 2 * AgentKind::ALL.len());
    assert_eq!(seen, rows.len());
    assert!(rows.iter().all(|r| r.status == "ok" && r.eval_asr.is_some()));
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + rows.len());
}

#[test]
fn sweep_records_point_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    // 5 atoms is not a square grid, so that point fails while 4 runs.
    let rows = cmd_sweep(&tiny(AgentKind::Random), "N", &["5".into(), "4".into()], Some(dir.path()), |_| {})
        .unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows[..3].iter().all(|r| r.status == "error" && !r.message.is_empty()));
    assert!(rows[3..].iter().all(|r| r.status == "ok"));
}

#[test]
fn sweep_rejects_bad_axis_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let base = tiny(AgentKind::Random);
    let err = cmd_sweep(&base, "Q", &["1".into()], Some(dir.path()), |_| {}).unwrap_err();
    assert!(err.is_usage() && err.to_string().contains("axis"), "{err}");
    let err = cmd_sweep(&base, "L", &["1.5".into()], Some(dir.path()), |_| {}).unwrap_err();
    assert!(err.is_usage(), "{err}");
    let err = cmd_sweep(&base, "P0", &["ten".into()], Some(dir.path()), |_| {}).unwrap_err();
    assert!(err.is_usage(), "{err}");
}

fn metrics_file(dir: &Path, name: &str, asr: &[f64]) -> PathBuf {
    let rows: Vec<IterationMetrics> = asr
        .iter()
        .enumerate()
        .map(|(i, &a)| IterationMetrics {
            iteration: i,
            env_steps: (i + 1) * 100,
            mean_asr: a,
            mean_reward: a,
            jain: 1.0,
            qos_violation_rate: 0.0,
            surrogate_loss: 0.0,
            value_loss: 0.0,
            entropy: 0.0,
            clip_fraction: 0.0,
            wall_seconds: 0.0,
        })
        .collect();
    let path = dir.join(name);
    write_metrics(std::fs::File::create(&path).unwrap(), &rows).unwrap();
    path
}

/// Parses the plot-data CSV into (steps, columns).
fn parse_plot(text: &str) -> Vec<(usize, Vec<Option<f64>>)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            let steps = it.next().unwrap().parse().unwrap();
            (steps, it.map(|c| c.parse().ok()).collect())
        })
        .collect()
}

#[test]
fn plotdata_smoothing_cases() {
    let dir = tempfile::tempdir().unwrap();
    let series = [0.3, 0.1, 0.7, 0.2];
    let a = metrics_file(dir.path(), "a.csv", &series);
    let table = parse_plot(&cmd_plotdata(std::slice::from_ref(&a), 1).unwrap());
    let got: Vec<f64> = table.iter().map(|(_, c)| c[0].unwrap()).collect();
    assert_eq!(got, series);

    let flat = metrics_file(dir.path(), "flat.csv", &[0.7; 6]);
    for (_, c) in parse_plot(&cmd_plotdata(&[flat], 3).unwrap()) {
        assert!((c[0].unwrap() - 0.7).abs() < 1e-15);
    }

    // 0,0,0,1,1,1,1 with window 3: ramp 1/3, 2/3, 1 starting at the step.
    let step = metrics_file(dir.path(), "step.csv", &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    let got: Vec<f64> = parse_plot(&cmd_plotdata(&[step], 3).unwrap())
        .iter()
        .map(|(_, c)| c[0].unwrap())
        .collect();
    let want = [0.0, 0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-15, "{got:?}");
    }

    let short = metrics_file(dir.path(), "short.csv", &[0.5, 0.5]);
    let table = parse_plot(&cmd_plotdata(&[a, short], 1).unwrap());
    assert_eq!(table.len(), 4);
    assert_eq!(table[3].0, 400);
    assert_eq!(table[3].1, vec![Some(0.2), None]);
}

#[test]
fn plotdata_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("other.csv");
    std::fs::write(&path, "step,value\n1,0.5\n").unwrap();
    let err = cmd_plotdata(&[path], 2).unwrap_err();
    assert!(matches!(err, Error::Schema(_)) && err.is_usage(), "{err}");
    let good = metrics_file(dir.path(), "ok.csv", &[0.1]);
    assert!(cmd_plotdata(&[good], 0).unwrap_err().is_usage());
}
