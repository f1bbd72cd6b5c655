use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
seed = 3
[space]
model = "cells"
n = 32
[w]
kind = "power"
a = 0.5
[sigma]
kind = "power"
a = -0.5
[sweep]
a = [-0.5, 0.5]
"#;

fn shtk(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("exp.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_shtk"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn verify_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let run = shtk(dir.path(), BASE, &["verify", "thm1"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let csv = dir.path().join("out/report-thm1.csv");
    let first = std::fs::read(&csv).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(summary["rows"], 2);
    assert_eq!(code(&shtk(dir.path(), BASE, &["verify", "thm1"])), 0);
    assert_eq!(std::fs::read(&csv).unwrap(), first);
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (args, file) in [
        (&["space", "build"][..], "report-space.csv"),
        (&["dyadic", "build"][..], "report-dyadic.csv"),
        (&["constants"][..], "report-constants.csv"),
        (&["sparse", "norm"][..], "report-sparse.csv"),
        (&["corona"][..], "report-corona.csv"),
        (&["verify", "thm2"][..], "report-thm2.csv"),
        (&["probe", "domination"][..], "report-domination.csv"),
    ] {
        let out = shtk(dir.path(), BASE, args);
        assert_eq!(
            code(&out),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(dir.path().join("out").join(file).exists(), "{file}");
    }
    assert!(dir.path().join("out/report-space.json").exists());
}

#[test]
fn formats_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = shtk(
        dir.path(),
        BASE,
        &[
            "--format",
            "table",
            "--seed",
            "9",
            "--jobs",
            "2",
            "constants",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/report-constants.txt").exists());
    let out = shtk(
        dir.path(),
        BASE,
        &["--format", "plotdata", "verify", "thm1"],
    );
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("out/report-thm1_a.dat").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = BASE.replace("kind = \"power\"\na = 0.5", "kind = \"gaussian\"");
    assert_eq!(code(&shtk(dir.path(), &unknown, &["verify", "thm1"])), 2);
    let empty = BASE.replace("a = [-0.5, 0.5]", "a = []");
    assert_eq!(code(&shtk(dir.path(), &empty, &["verify", "thm1"])), 2);
    let bad_r =
        format!("{BASE}\n[bumps]\nr = 1.0\ns = 2.0\n").replace("[sweep]\na = [-0.5, 0.5]\n", "");
    assert_eq!(code(&shtk(dir.path(), &bad_r, &["verify", "thm2"])), 2);
    let plane = BASE.replace("model = \"cells\"\nn = 32", "model = \"lattice\"\nn = 16");
    assert_eq!(code(&shtk(dir.path(), &plane, &["probe", "domination"])), 2);
    let missing = Command::new(env!("CARGO_BIN_EXE_shtk"))
        .args(["verify", "thm1"])
        .output()
        .unwrap();
    assert_eq!(code(&missing), 2);
}

#[test]
fn violations_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // an upper estimate far below the lower one is an empty interval
    let tight = format!(
        "{}\n[norm]\nc_test = 1e-6\n",
        BASE.replace("seed = 3", "seed = 3\np = 3.0")
    );
    let out = shtk(dir.path(), &tight, &["verify", "thm1"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}
