use std::process::Command;

use ecl_sim::harness::RunRecord;

fn sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sim"))
}

#[test]
fn verify_mixing_exits_zero() {
    let out = sim().args(["verify", "mixing"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 6);
}

#[test]
fn run_writes_records_with_echoed_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "algorithm = \"ecl\"\neta = 0.5\nalpha_total = 1000.0\ntopology = [\"ring\"]\nzeta_sq = [4.0]\nnodes = 6\ndim = 3\nrounds = 20\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = sim()
        .args([
            "--out",
            out_dir.to_str().unwrap(),
            "run",
            "--config",
            cfg.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let record = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap() != "index.csv")
        .unwrap();
    let rec = RunRecord::load(&record).unwrap();
    assert_eq!(rec.rows.len(), 21);
    assert_eq!(rec.meta["algorithm"], "ecl");
    assert_eq!(rec.meta_f64("alpha_total"), Some(1000.0));
    assert!(out_dir.join("index.csv").exists());
}

#[test]
fn bad_config_exits_nonzero_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "algorithm = \"dpsgd\"\neta = 0.1\ntheta = 0.5\n").unwrap();
    let out = sim()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("theta"));
}

#[test]
fn unknown_preset_is_rejected() {
    let out = sim().args(["preset", "fig9"]).output().unwrap();
    assert!(!out.status.success());
}
