use std::process::Command;

fn bh(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bh")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn burgers_reference_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = bh(&["burgers-ref", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("collision_time = 1.0000000000e0"), "{stdout}");
    assert!(dir.path().join("burgers_ref.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "schema_version = 1\nmode = \"sideways\"\n").unwrap();
    assert_eq!(bh(&["single", "--config", path.to_str().unwrap()]).0, 2);
    std::fs::write(&path, "schema_version = 1\nmode = \"fv_ref\"\n").unwrap();
    assert_eq!(bh(&["single", "--config", path.to_str().unwrap()]).0, 2);
    assert_eq!(bh(&["single", "--config", dir.path().join("missing.toml").to_str().unwrap()]).0, 2);
}

#[test]
fn out_of_regime_run_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weak.toml");
    std::fs::write(&path, "schema_version = 1\nmode = \"single\"\n\n[data]\njump = -0.5\n").unwrap();
    assert_eq!(bh(&["single", "--config", path.to_str().unwrap()]).0, 3);
}

#[test]
fn validate_prints_one_line_per_criterion() {
    let (code, stdout) = bh(&["validate", "2", "7"]);
    assert_eq!(code, 0, "{stdout}");
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("PASS  2") && lines[1].starts_with("PASS  7"), "{stdout}");
}
