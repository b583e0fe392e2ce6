use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pluriperiod"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pluriperiod-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn cohomology_suite_writes_a_passing_report() {
    let out = scratch("cohomology.json");
    let status = bin()
        .args(["run", "--suite", "cohomology", "--m", "-1", "--nu", "0", "--radius", "6", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["pass"], true);
    let dims = report["records"].as_array().unwrap().iter().find(|r| r["kind"] == "cohomology").unwrap();
    assert_eq!(dims["report"]["dimH1"], 6);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let cfg = scratch("bol.json");
    fs::write(&cfg, r#"{"suite": "bol", "m": -1, "lambda": 3.0}"#).unwrap();
    let output = bin().args(["run", "--m", "-2", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["config"]["m"], -2);
    assert_eq!(report["config"]["lambda"], 3.0);
    let identity: Vec<_> = report["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["check_id"] == "bol-identity")
        .map(|r| r["params"]["k_prime"].as_u64().unwrap())
        .collect();
    assert_eq!(identity, vec![5]);
}

#[test]
fn failing_checks_give_nonzero_exit() {
    let status = bin().args(["run", "--suite", "classical", "--branch-points", "0,1,2,3,4,4"]).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn bad_configuration_is_an_error() {
    assert_eq!(bin().args(["run", "--suite", "nonsense"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["run", "--suite", "cross-weight", "--m", "-2", "--n", "-1"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn export_octagon_writes_svg_and_csv() {
    let (svg, csv) = (scratch("octagon.svg"), scratch("generators.csv"));
    let status = bin().args(["export-octagon", "--svg"]).arg(&svg).arg("--csv").arg(&csv).status().unwrap();
    assert!(status.success());
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.starts_with("name,a,b,c,d"));
}
