use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nnghmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnghmc")).args(args).output().expect("spawn nnghmc")
}

fn write_config(dir: &Path, name: &str, oracle: &str, n: usize) -> String {
    let path = dir.join(format!("{name}.json"));
    fs::write(
        &path,
        format!(
            r#"{{
  "name": "{name}",
  "target": {{ "family": "banana" }},
  "oracle": {oracle},
  "sampler": {{ "leapfrog_steps": 5, "step_size": 0.1, "n_iterations": {n}, "seed": 3 }}
}}"#
        ),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sample_then_ess() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "hmc", r#"{ "kind": "exact" }"#, 400);
    let run = tmp.path().join("run");
    let o = nnghmc(&["sample", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("400 draws"));
    for f in ["config.json", "draws.csv", "summary.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }

    let o = nnghmc(&["ess", run.join("draws.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ESS min"));

    // a second run into the same directory is refused without --overwrite
    let o = nnghmc(&["sample", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = nnghmc(&["sample", &cfg, "--out", run.to_str().unwrap(), "--overwrite"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn nn_run_writes_the_network() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("nn.json");
    fs::write(
        &path,
        r#"{
  "name": "nn",
  "target": { "family": "banana" },
  "oracle": { "kind": "nn", "hidden": 20, "epochs": 5 },
  "sampler": { "leapfrog_steps": 5, "step_size": 0.1, "n_iterations": 300, "seed": 2 },
  "schedule": { "start_iter": 50, "end_iter": 150, "check_interval": 50 }
}"#,
    )
    .unwrap();
    let run = tmp.path().join("run");
    let o = nnghmc(&["-v", "sample", path.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("net.json").exists());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["oracle"], "nn");
    assert!(summary["schedule"]["checks"].as_array().is_some_and(|c| !c.is_empty()));
}

#[test]
fn bad_configs_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = tmp.path().join("unknown.json");
    fs::write(&unknown, r#"{"name": "x", "target": {"family": "banana"}, "oracle": {"kind": "exact"}, "sampler": {"leapfrog_steps": 5, "step_size": 0.1, "n_iterations": 10}, "colour": 1}"#).unwrap();
    let o = nnghmc(&["sample", unknown.to_str().unwrap(), "--out", tmp.path().join("r").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    // nn without a schedule
    let cfg = write_config(tmp.path(), "nn", r#"{ "kind": "nn", "hidden": 10, "epochs": 1 }"#, 100);
    let o = nnghmc(&["sample", &cfg, "--out", tmp.path().join("r2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = nnghmc(&["sample", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = nnghmc(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nnghmc(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn compare_prints_a_speed_table() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "hmc", r#"{ "kind": "exact" }"#, 300);
    let out = tmp.path().join("cmp");
    let o = nnghmc(&["compare", &a, &a, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("hmc"));
    assert!(out.join("compare.json").exists() && out.join("table.txt").exists());
    assert!(out.join("0_hmc").join("draws.csv").exists());
}

#[test]
fn verify_passes_and_catches_a_sign_flip() {
    let o = nnghmc(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));

    let o = nnghmc(&["verify", "--inject-sign-flip"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}
