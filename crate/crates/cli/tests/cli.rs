use std::path::Path;
use std::process::{Command, Output};

fn lapbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lapbench")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const IDENTITIES: &str = r#"
experiment = "identities"
seed = 1

[output]
formats = ["csv", "json"]

[model]
d = 1
radii = [8]

[math]
margin = 2
"#;

#[test]
fn default_invocation_lists_eight_experiments() {
    let out = lapbench(&[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ids = text.lines().filter(|l| !l.starts_with(' ')).count();
    assert_eq!(ids, 8, "{text}");
    let out = lapbench(&["--list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 8);
}

#[test]
fn identities_config_exits_zero_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "id.toml", IDENTITIES);
    let out_dir = dir.path().join("out");
    let out = lapbench(&["--config", &cfg, "--out", out_dir.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let residuals = std::fs::read_to_string(out_dir.join("residuals.csv")).unwrap();
    assert!(residuals.starts_with("d,r_box,identity,residual,min_eigenvalue"));
    assert!(out_dir.join("summary.json").exists());
    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_sha256 ") && manifest.contains("wall_time_seconds"));
}

#[test]
fn malformed_config_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &IDENTITIES.replace("margin = 2", "margn = 2"));
    let out = lapbench(&["--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("margn") && err.contains("line"), "{err}");
    let cfg = write(dir.path(), "syntax.toml", "experiment = \n");
    assert_eq!(lapbench(&["--config", &cfg]).status.code(), Some(2));
    assert_eq!(lapbench(&["--config", "/nonexistent/cfg.toml"]).status.code(), Some(2));
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "strict.toml", &IDENTITIES.replace("margin = 2", "margin = 2\ntol = -1.0"));
    let out = lapbench(&["--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "id.toml", IDENTITIES);
    let out_dir = dir.path().join("o");
    let out = lapbench(&["--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap().contains("seed 99"));
}
