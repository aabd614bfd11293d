use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use simsec::experiment::{profiles, ExperimentConfig};
use simsec::ppo::AgentKind;

fn simsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simsec")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(kind: AgentKind) -> ExperimentConfig {
    let mut cfg = profiles::desk(kind);
    cfg.geometry.atoms_per_layer = 4;
    cfg.geometry.num_layers = 1;
    cfg.agent.hidden = vec![8];
    cfg.agent.qubits = 2;
    cfg.agent.pqc_layers = 1;
    cfg.agent.pre_filters = 4;
    cfg.agent.pre_dense = 4;
    cfg.agent.post_hidden = vec![4];
    cfg.ppo.minibatch = 128;
    cfg.ppo.epochs = 1;
    cfg.run.total_steps = 2048;
    cfg.run.eval_episodes = 2;
    cfg
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    path
}

/// metrics.csv with the trailing wall_seconds column removed.
fn metrics_without_timing(dir: &Path) -> String {
    let text = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",wall_seconds"));
    text.lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect()
}

#[test]
fn train_twice_gives_identical_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &small_config(AgentKind::Classical));
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = simsec(&["train", "--config", cfg, "--seed", "5", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("trained classical agent for 2048 steps"));
    }
    let m = metrics_without_timing(&a);
    // Header plus one row per 1024-step batch.
    assert_eq!(m.lines().count(), 3);
    assert_eq!(m, metrics_without_timing(&b));

    let o = simsec(&["train", "--config", cfg, "--seed", "6", "--out", b.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(m, metrics_without_timing(&b));

    let ck = a.join("checkpoint.json");
    let ck = ck.to_str().unwrap();
    let one = simsec(&["eval", "--config", cfg, "--checkpoint", ck, "--episodes", "1"]);
    assert!(one.status.success(), "{}", stderr(&one));
    assert!(stdout(&one).contains("degenerate"));
    let many = simsec(&["eval", "--config", cfg, "--checkpoint", ck, "--episodes", "4"]);
    assert!(stdout(&many).contains("4 episodes"));
    assert!(!stdout(&many).contains("degenerate"));
    assert_eq!(stdout(&many), stdout(&simsec(&["eval", "--config", cfg, "--checkpoint", ck, "--episodes", "4"])));

    let table = simsec(&["plotdata", a.join("metrics.csv").to_str().unwrap(), "--window", "1"]);
    assert!(table.status.success());
    assert_eq!(stdout(&table).lines().count(), 3);
}

#[test]
fn missing_field_exits_2_with_its_name() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(AgentKind::Classical).to_toml_string().unwrap();
    let text: String = text.lines().filter(|l| !l.starts_with("total_steps")).map(|l| format!("{l}\n")).collect();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let o = simsec(&["train", "--config", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("total_steps"), "{}", stderr(&o));
}

#[test]
fn invalid_value_exits_2_with_field() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(AgentKind::Classical);
    cfg.geometry.num_users = 5;
    let path = write_config(tmp.path(), "c.toml", &cfg);
    let o = simsec(&["train", "--config", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("num_users"), "{}", stderr(&o));
}

#[test]
fn invalid_sweep_axis_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.toml", &small_config(AgentKind::Random));
    let o = simsec(&[
        "sweep", "--config", path.to_str().unwrap(), "--axis", "K", "--values", "1,2",
        "--out", tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("axis"));
}

#[test]
fn sweep_writes_one_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(AgentKind::Random);
    cfg.ppo.batch_steps = 64;
    cfg.ppo.minibatch = 32;
    cfg.run.total_steps = 64;
    let path = write_config(tmp.path(), "c.toml", &cfg);
    let o = simsec(&[
        "sweep", "--config", path.to_str().unwrap(), "--axis", "L", "--values", "1,2",
        "--out", tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn plotdata_schema_mismatch_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("x.csv");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    let o = simsec(&["plotdata", path.to_str().unwrap(), "--window", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_inputs_fail() {
    let o = simsec(&["train", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = simsec(&["plotdata", "/nonexistent/metrics.csv"]);
    assert_eq!(o.status.code(), Some(1));
}
