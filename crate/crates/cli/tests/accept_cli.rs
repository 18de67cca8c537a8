//! Command-line contract: outputs, exit codes, config precedence.

use std::path::Path;
use std::process::{Command, Output};

use ionjcm::fock::FockBasis;
use ionjcm::model::IonParams;
use ionjcm::spectrum::eigenvalues_at;
use serde_json::Value;

fn ionjcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionjcm"))
        .args(args)
        .env_remove("IONJCM_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn roots_m0_matches_closed_form() {
    let v = json(&ionjcm(&[
        "roots", "--m", "0", "--branch", "plus", "--solve-for", "eta2", "--range", "0", "5", "--omega", "0.5",
        "--delta", "0",
    ]));
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((f(&roots[0]["root"]) - 0.75).abs() < 1e-10);
    assert_eq!(roots[0]["closed_form_match"], Value::Bool(true));
    assert_eq!(roots[0]["double_root_flag"], Value::Bool(false));
    assert!(f(&roots[0]["det_residual"]) < 1e-8);
    assert_eq!(v["meta"]["command"], "roots");
}

#[test]
fn roots_m1_and_delta_solve() {
    let v = json(&ionjcm(&["roots", "--m", "1", "--omega", "0.5", "--range", "0", "5"]));
    let got: Vec<f64> = v["roots"].as_array().unwrap().iter().map(|r| f(&r["root"])).collect();
    assert_eq!(got.len(), 2);
    assert!((got[0] - 0.4417680).abs() < 5e-8 && (got[1] - 3.1832320).abs() < 5e-8, "{got:?}");

    let v = json(&ionjcm(&[
        "roots", "--solve-for", "delta", "--m", "0", "--eta", "1", "--omega", "0.5", "--range", "-3", "3",
    ]));
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((f(&roots[0]["root"]) - 0.25).abs() < 1e-10);
    assert_eq!(roots[0]["closed_form_match"], Value::Null);
}

#[test]
fn roots_csv_has_header_and_envelope() {
    let out = ionjcm(&["roots", "--m", "1", "--omega", "0.5", "--range", "0", "5", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "m,branch,solve_for,root,det_residual,closed_form_match,double_root_flag");
    assert_eq!(lines.len(), 3);
    assert!(text.starts_with("# tool: ionjcm"));
}

#[test]
fn ansatz_at_root_and_off_root() {
    let v = json(&ionjcm(&["ansatz", "--m", "0", "--eta2", "0.75", "--omega", "0.5"]));
    assert!((f(&v["energy"]) - 1.0).abs() < 1e-15);
    assert!(f(&v["residual_ion"]) < 1e-8);
    assert!(f(&v["residual_jcm"]) < 1e-8);
    assert_eq!(v["verified"], Value::Bool(true));

    let v = json(&ionjcm(&[
        "ansatz", "--m", "1", "--eta2", "0.4417680", "--omega", "0.5", "--polish", "--emit-state", "--dim", "60",
    ]));
    let d0 = f(&v["d"][0][0]);
    let c2 = &v["c"][2];
    assert!((f(&c2[0]) / d0 - 8.1077).abs() < 1e-3, "{c2}");
    assert!(f(&c2[1]).abs() < 1e-12);
    assert_eq!(v["meta"]["warnings"].as_array().unwrap().len(), 1);
    let size = 2 * (60 + 40);
    assert_eq!(v["state"]["ion"].as_array().unwrap().len(), size);
    assert_eq!(v["state"]["jcm"].as_array().unwrap().len(), size);

    let out = ionjcm(&["ansatz", "--m", "1", "--eta2", "0.5", "--omega", "0.5"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not at a root"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&ionjcm(&["roots", "--nu", "-1"])), 1);
    assert_eq!(code(&ionjcm(&["roots", "--bogus"])), 1);
    assert_eq!(code(&ionjcm(&["roots", "--range", "2", "1"])), 1);
    assert_eq!(code(&ionjcm(&["roots", "--solve-for", "delta"])), 1);
    assert_eq!(code(&ionjcm(&["spectrum", "--eta-min", "2", "--eta-max", "1"])), 1);
    assert_eq!(code(&ionjcm(&["ansatz", "--m", "0"])), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_ionjcm"))
        .args(["roots"])
        .env("IONJCM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert_eq!(code(&ionjcm(&["--help"])), 0);
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"omega": 0.5, "m": 1, "range": [0, 5]}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&ionjcm(&["roots", "--config", cfg]));
    assert_eq!(v["meta"]["config"]["m"], 1);
    assert_eq!(v["roots"].as_array().unwrap().len(), 2);
    let v = json(&ionjcm(&["roots", "--config", cfg, "--m", "0"]));
    assert_eq!(v["meta"]["config"]["m"], 0);
    assert!((f(&v["meta"]["config"]["omega"]) - 0.5).abs() < 1e-15);
    std::fs::write(dir.path().join("bad.json"), r#"{"mm": 1}"#).unwrap();
    let bad = dir.path().join("bad.json");
    assert_eq!(code(&ionjcm(&["roots", "--config", bad.to_str().unwrap()])), 1);
}

fn read_csv(path: &Path) -> (Value, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let config = text
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .map(|c| serde_json::from_str(c).unwrap())
        .expect("config line");
    let mut data = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(data.next().unwrap(), "eta,level_index,tracked_id,energy");
    let rows = data.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (config, rows)
}

#[test]
fn spectrum_rows_recheck_from_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let status = ionjcm(&[
        "spectrum", "--omega", "0.5", "--eta-min", "0.5", "--eta-max", "1.2", "--steps", "35", "--levels", "4",
        "--dim", "60", "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let (config, rows) = read_csv(&out);
    assert_eq!(rows.len(), 36 * 4);
    let p = IonParams::new(f(&config["nu"]), f(&config["delta"]), f(&config["omega"]), 0.0).unwrap();
    let basis = FockBasis::new(config["dim"].as_u64().unwrap() as usize, config["buffer"].as_u64().unwrap() as usize)
        .unwrap();
    for row in rows.iter().step_by(13) {
        let eta: f64 = row[0].parse().unwrap();
        let level: usize = row[1].parse().unwrap();
        let energy: f64 = row[3].parse().unwrap();
        let ev = eigenvalues_at(&p.with_eta(eta), &basis).unwrap();
        assert!((ev[level] - energy).abs() < 1e-12);
    }

    let events: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("scan.events.json")).unwrap())
        .unwrap();
    let crossings: Vec<&Value> = events["events"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["classification"] == "crossing")
        .collect();
    assert_eq!(crossings.len(), 1);
    assert!((f(&crossings[0]["location"]) - 0.75f64.sqrt()).abs() < 1e-4);
    assert!((f(&crossings[0]["energy"]) - 1.0).abs() < 1e-4);
}

#[test]
fn detuned_spectrum_events_are_avoided() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let status = ionjcm(&[
        "spectrum", "--delta", "0.5", "--omega", "0.5", "--eta-min", "0.4", "--eta-max", "2.0", "--steps", "40",
        "--levels", "4", "--dim", "60", "--format", "json", "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 41 * 4);
    let events = v["events"].as_array().unwrap();
    assert!(!events.is_empty());
    assert!(events.iter().all(|e| e["classification"] == "avoided" && f(&e["gap"]) > 1e-6));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["asymptotics", "--eta-list", "1,2", "--levels", "4", "--dim", "60"];
    let a = ionjcm(&args);
    let b = ionjcm(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("eta,level_index,energy,asymptote_distance,overlap\n"));
    assert!(text.contains("# distance_monotone: true"));
}

#[test]
fn verify_quick_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let ok = ionjcm(&["verify", "--quick", "--out", report.to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
    assert_eq!(v["suites"].as_array().unwrap().len(), 6);

    let bad = ionjcm(&["verify", "--quick", "--corrupt-t"]);
    assert_eq!(code(&bad), 3);
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("transform-equivalence") && l.contains("FAIL")));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("transform-equivalence"));
}
