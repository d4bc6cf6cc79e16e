use std::fs;
use std::process::{Command, Output};

use labcap_harness::error::exit;

fn labcap(args: &[&str], out: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labcap"))
        .args(args)
        .env("LABCAP_OUT_DIR", out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn show_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let shown = labcap(&["show", "exp1"], dir.path());
    assert_eq!(shown.status.code(), Some(exit::SUCCESS));
    let text = String::from_utf8(shown.stdout).unwrap();
    let text = text
        .replace("name = \"exp1\"", "name = \"small\"")
        .replace("nodes = 256", "nodes = 32")
        .replace("max_steps = 500000", "max_steps = 50");
    let path = dir.path().join("small.toml");
    fs::write(&path, text).unwrap();
    let run = labcap(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(
        run.status.code(),
        Some(exit::SUCCESS),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["name"], "small");
    assert_eq!(report["fem"]["steps"], 50);
    assert!(dir.path().join("small/report.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        labcap(&["run", "nope"], dir.path()).status.code(),
        Some(exit::CONFIG)
    );
    assert_eq!(
        labcap(
            &["sweep", "exp1", "--param", "gamma", "--range", "1:2"],
            dir.path()
        )
        .status
        .code(),
        Some(exit::CONFIG)
    );

    let broken = dir.path().join("broken.toml");
    fs::write(
        &broken,
        "name = \"broken\"\n[reaction]\nalpha1 = 0.5\nalpha2 = 0.15\nbeta1 = 0.5\nbeta2 = 0.5\n\
         [diffusion]\nc1 = 0.01\nc2 = 0.01\na1 = 0.3\na2 = 3e-4\n",
    )
    .unwrap();
    let b = broken.to_str().unwrap();
    assert_eq!(
        labcap(&["run", b, "--no-fem"], dir.path()).status.code(),
        Some(exit::STAGE)
    );
    assert_eq!(
        labcap(&["table1", "--no-fem", b], dir.path()).status.code(),
        Some(exit::STAGE)
    );

    // Printed precision is not met by every published row.
    let t = labcap(&["table1", "--no-fem", "exp3"], dir.path());
    assert_eq!(t.status.code(), Some(exit::COMPARISON));
    assert!(String::from_utf8_lossy(&t.stdout).contains("MISMATCH"));
    assert_eq!(
        labcap(&["table1", "--no-fem", "exp1"], dir.path())
            .status
            .code(),
        Some(exit::SUCCESS)
    );
}

#[test]
fn dispersion_verb_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = labcap(&["dispersion", "exp2", "--b", "0", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(exit::SUCCESS));
    let listed = String::from_utf8(o.stdout).unwrap();
    assert_eq!(listed.lines().count(), 2);
    assert!(dir.path().join("exp2/dispersion_b0.5.csv").exists());
}
