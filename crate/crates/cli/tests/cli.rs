use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn octokdv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_octokdv")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const CONFIG: &str = r#"{
  "flow": {"kind": "kdv", "dt": 0.01, "t_end": 0.05},
  "grid": {"n": 32, "L": 20.0},
  "initial_condition": {"kind": "soliton", "c": 1.0, "x0": 10.0},
  "outputs": {"snapshot_every": 2}
}"#;

#[test]
fn run_writes_outputs_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("run");
    let o = octokdv(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["snapshot_00000.csv", "snapshot_00003.csv", "charges.csv", "gardner_charges.csv", "meta.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["schema"], "octokdv.run-meta/1");
    assert_eq!(meta["steps"], 5);

    // meta.json is itself a valid config and reproduces the run
    let again = dir.path().join("again");
    let meta_path = out.join("meta.json");
    let o = octokdv(&["run", "--config", meta_path.to_str().unwrap(), "--out", again.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(out.join("snapshot_00003.csv")).unwrap(),
        fs::read(again.join("snapshot_00003.csv")).unwrap()
    );
}

#[test]
fn table_prints_signed_units() {
    let dir = tempfile::tempdir().unwrap();
    let o = octokdv(&["table", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[1], "e0,+e0,+e1,+e2,+e3,+e4,+e5,+e6,+e7");
    // every imaginary unit squares to -1
    for (j, row) in rows[1..].iter().enumerate().skip(1) {
        assert_eq!(row.split(',').nth(j + 1), Some("-e0"));
    }
    assert_eq!(fs::read_to_string(dir.path().join("multiplication_table.csv")).unwrap(), csv);
}

#[test]
fn verify_algebra_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = octokdv(&["verify", "algebra", "--out", dir.path().to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn bad_config_yields_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("\"n\": 32", "\"n\": 0"));
    let out = dir.path().join("run");
    let o = octokdv(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert!(err["error"].is_string());
    assert!(err["message"].as_str().unwrap().contains("n"));
    assert!(out.join("error.json").exists());
}

#[test]
fn missing_config_is_an_error() {
    let o = octokdv(&["run"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_creates_one_directory_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONFIG.replace("\"kind\": \"kdv\"", "\"kind\": \"gardner\"").replace(
        "\"outputs\"",
        "\"sweep\": {\"epsilons\": [0.0, 0.25]},\n  \"outputs\"",
    );
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("sweep");
    let o = octokdv(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
}

#[test]
fn symmetry_exit_code_follows_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let kdv = CONFIG.replace(
        "\"outputs\"",
        "\"symmetries\": [{\"kind\": \"automorphism\", \"i\": 1, \"j\": 2, \"t\": 0.4}],\n  \"outputs\"",
    );
    let o = octokdv(&["symmetry", "--config", &write_config(dir.path(), &kdv), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    // the cubic term breaks Galilean invariance
    let gardner = CONFIG.replace("\"kind\": \"kdv\"", "\"kind\": \"gardner\", \"epsilon\": 1.0").replace(
        "\"outputs\"",
        "\"symmetries\": [{\"kind\": \"galileo\", \"c\": 0.5}],\n  \"outputs\"",
    );
    let out = dir.path().join("sym");
    let o = octokdv(&["symmetry", "--config", &write_config(dir.path(), &gardner), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("symmetry.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
}
