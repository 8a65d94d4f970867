use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thirring-lab"))
}

#[test]
fn bifurcation_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let status = lab().args(["bifurcation", "--out"]).arg(dir.path()).output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let report: String = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"experiment\": \"bifurcation\""));
    let csv = std::fs::read_to_string(dir.path().join("along_sequence.csv")).unwrap();
    assert!(csv.starts_with("alpha,n,epsilon,sup_distance,lp_distance_u"));
}

#[test]
fn config_file_sections_are_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.toml");
    std::fs::write(&cfg, "[pv_residual]\nalpha = [0.5]\ncount = 4\n").unwrap();
    let out = dir.path().join("out");
    let status = lab().args(["pv-residual", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert!(status.success());
    let rows = std::fs::read_to_string(out.join("along_sequence.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4);
}

#[test]
fn invalid_configuration_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[pv_residual]\ntheta = \"gaussian\"\n").unwrap();
    let out = lab().args(["pv-residual", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not vanish"));
}

#[test]
fn failing_verdict_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    std::fs::write(&cfg, "[bifurcation]\nsup_threshold = 1e-30\n").unwrap();
    let out = lab().args(["bifurcation", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn seed_is_accepted_and_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, seed) in [(&a, "1"), (&b, "2")] {
        assert!(lab().args(["self-similar", "--seed", seed, "--out"]).arg(out).output().unwrap().status.success());
    }
    for table in ["phases.csv", "slopes.csv"] {
        assert_eq!(std::fs::read(a.join(table)).unwrap(), std::fs::read(b.join(table)).unwrap());
    }
}
