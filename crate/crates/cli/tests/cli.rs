use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[grid]
d = 1
N = 64
L = 12.0

[physics]
sigma1 = 1.0
sigma2 = 0.5
sigma3 = 0.5
a = { kind = "gaussian", amplitude = 0.5, width = 2.0 }

[initial]
profile = { kind = "gaussian", amplitude = 0.8, width = 1.0 }

[integrator]
dt = 0.01
T = 0.2
"#;

fn dnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnls")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_prints_hypothesis_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = dnls(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["control_holds"], serde_json::Value::Bool(true));
    assert!(report["lambda"].as_f64().unwrap() >= 0.0);
}

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let o = dnls(&["run", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("mass") && text.contains("PASS"), "{text}");
    for name in ["config.toml", "hypotheses.json", "series.csv", "verdicts.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.starts_with("t,mass,energy,"));
    assert_eq!(csv.lines().count(), 1 + 3);

    let o = dnls(&["verify", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("mass PASS")));
}

#[test]
fn quiet_run_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = dnls(&["--quiet", "run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn overflowing_data_aborts_with_last_good_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("amplitude = 0.8", "amplitude = 1e200"));
    let out = dir.path().join("out");
    let o = dnls(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("non-finite"), "{}", stderr(&o));
    assert!(out.join("fields").join("last_good.dnls").is_file());
}

#[test]
fn config_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("[integrator]", "[time]"));
    let o = dnls(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("unknown field `time`"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), &SMALL.replace("sigma3 = 0.5", "sigma3 = 1.0"));
    assert_eq!(dnls(&["check", "--config", &cfg]).status.code(), Some(3));

    assert_eq!(dnls(&["check"]).status.code(), Some(3));
    let missing = dir.path().join("absent.toml");
    assert_eq!(dnls(&["check", "--config", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[sweep]\nsigma1 = [0.8, 1.0]\na_amplitude = [0.5, 1.0]\n");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("sweep");
    let o = dnls(&["--threads", "2", "sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let summary = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4, "{summary}");
}
