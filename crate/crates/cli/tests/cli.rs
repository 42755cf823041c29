use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[scenario]
name = "cli-small"
horizon = 1.0
plane = 3.0
target_courant = 0.5

[grid]
nx = 32
ny = 9
length = 4.0
x0 = 0.0
sponge_width = 0.35

[velocity]
kind = "uniform"
centerline_speed = 4.0

[estimation]
max_iterations = 5
"#;

fn adjsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adjsense"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.in.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn estimate_writes_tagged_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("run");
    let o = adjsense(&["estimate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let phi = fs::read_to_string(out.join("phi.csv")).unwrap();
    let first = phi.lines().next().unwrap();
    assert!(first.starts_with("# manifest ") && first.len() == "# manifest ".len() + 64);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains(&first["# manifest ".len()..]));
    assert!(manifest.contains("\"command\": \"estimate\""));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = adjsense(&["forward", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(
        fs::read(a.join("measurements.csv")).unwrap(),
        fs::read(b.join("measurements.csv")).unwrap()
    );
}

#[test]
fn configuration_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &format!("{SMALL}\n[extra]\nkey = 1\n"));
    assert_eq!(
        adjsense(&["estimate", "--config", &bad]).status.code(),
        Some(2)
    );
    assert_eq!(adjsense(&["estimate"]).status.code(), Some(2));
    assert_eq!(
        adjsense(&["estimate", "--config", "/nonexistent/scenario.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_duality_passes() {
    let o = adjsense(&["verify", "--kind", "duality"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("duality") && text.contains("PASS"), "{text}");
}
