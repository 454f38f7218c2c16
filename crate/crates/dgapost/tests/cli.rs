use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dgapost::presets::PRESETS;
use dgapost::{output_dir, ExperimentConfig};

fn dgapost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgapost"))
        .args(args)
        .env_remove("DGAPOST_OUTPUT_DIR")
        .output()
        .unwrap()
}

const SMALL: &str = r#"
name = "small"
scheme = "ip"
degree = 1

[domain]
kind = "unit-square"
n = 2

[data]
exact = "sine"
frequency = 1.0

[mode]
kind = "uniform"
levels = 3
"#;

#[test]
fn lists_every_preset() {
    let out = dgapost(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for p in PRESETS {
        assert!(text.contains(p.name), "{}", p.name);
    }
}

#[test]
fn self_check_passes() {
    let out = dgapost(&["check"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.contains("[PASS]") && !text.contains("[FAIL]"));
}

#[test]
fn run_writes_reproducible_tables_and_vtk() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    fs::write(&config, SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = dgapost(&["run", config.to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let table = fs::read_to_string(a.join("table.csv")).unwrap();
    assert_eq!(table, fs::read_to_string(b.join("table.csv")).unwrap());
    let mut lines = table.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("level,cells,dofs,h,eta_R,eta_I,eta_J,total,error"));
    assert_eq!(lines.count(), 3);
    for level in 0..3 {
        for stem in ["mesh", "indicators"] {
            let vtk = fs::read_to_string(a.join(format!("{stem}_{level}.vtk"))).unwrap();
            assert!(vtk.starts_with("# vtk DataFile"), "{stem}_{level}");
        }
    }
    assert!(a.join("trace.csv").exists());
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL.replace("degree = 1", "degree = 1\nunknown = 3")).unwrap();
    assert_eq!(
        dgapost(&["run", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        dgapost(&["run", "no-such-preset-or-file"]).status.code(),
        Some(2)
    );
    let laplace = SMALL.replace("[data]", "[data]\ncoefficient = \"eq-diffusion\"");
    fs::write(&bad, laplace).unwrap();
    assert_eq!(
        dgapost(&["run", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn explicit_output_directory_takes_precedence() {
    let mut config = ExperimentConfig::parse(SMALL).unwrap();
    assert_eq!(output_dir(&config, None), Path::new("output").join("small"));
    config.output.directory = Some("from-config".into());
    assert_eq!(output_dir(&config, None), Path::new("from-config"));
    assert_eq!(
        output_dir(&config, Some(Path::new("explicit"))),
        Path::new("explicit")
    );
}
