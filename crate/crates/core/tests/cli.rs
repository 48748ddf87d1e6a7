use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn su11(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_su11"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn docs(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn interferometer(g2: f64, t_a: f64, t_b: f64) -> String {
    format!("[interferometer]\ng1 = 0.05\ng2 = {g2}\nt_a = {t_a}\nt_b = {t_b}\neta_a = 1.0\neta_b = 1.0\n")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn verdict<'a>(doc: &'a Value, observable: &str, kind: &str) -> &'a Value {
    doc["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["observable"] == observable && v["kind"] == kind)
        .unwrap()
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "unknown.toml", "bogus = 1\n");
    let broken = write(dir.path(), "broken.toml", "[interferometer\n");
    let out_of_range = write(dir.path(), "range.toml", &interferometer(0.05, 1.5, 1.0));
    for path in [&unknown, &broken, &out_of_range] {
        let out = su11(&["probe", "--config", path]);
        assert_eq!(out.status.code(), Some(2), "{path}");
    }
    let missing = su11(&["probe", "--config", "/nonexistent/su11.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_sweep = format!("{}\n[sweep]\ng2_min = 0.5\ng2_max = 0.1\n", interferometer(0.05, 1.0, 1.0));
    let bad_sweep = write(dir.path(), "sweep.toml", &bad_sweep);
    assert_eq!(su11(&["sweep", "--config", &bad_sweep]).status.code(), Some(2));
}

#[test]
fn lossless_probe_has_full_coincidence_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "probe.toml", &interferometer(0.05, 1.0, 1.0));
    let doc = json(&su11(&["probe", "--config", &cfg]));
    let v = &doc["engines"]["analytic"]["visibilities"];
    assert!((v["v_cc"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["v_a"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_grid_is_increasing_with_one_loss_balanced_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{}\n[sweep]\ng2_min = 1e-3\ng2_max = 1.0\npoints = 50\n",
        interferometer(0.05, 0.6, 0.55)
    );
    let cfg = write(dir.path(), "sweep.toml", &cfg);
    let out = su11(&["sweep", "--config", &cfg]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    let g2_col = headers.iter().position(|h| h == "g2").unwrap();
    let flag_col = headers.iter().position(|h| h == "loss_balanced").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    let g2: Vec<f64> = rows.iter().map(|r| r[g2_col].parse().unwrap()).collect();
    assert!(g2.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(rows.iter().filter(|r| &r[flag_col] == "true").count(), 1);
}

#[test]
fn compare_reproduces_the_advantage_examples() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json(&su11(&["compare", "--config", &docs("compare.toml")]));
    assert_eq!(verdict(&doc, "singles_a", "conditional")["holds"], true);
    assert_eq!(verdict(&doc, "singles_a", "unconditional")["holds"], false);
    assert!((doc["resource_ratio"].as_f64().unwrap() - 1.2).abs() < 1e-12);

    let high = write(dir.path(), "high.toml", &interferometer(0.5, 0.75, 0.75));
    let doc = json(&su11(&["compare", "--config", &high]));
    assert_eq!(verdict(&doc, "singles_a", "unconditional")["holds"], true);

    let edge = write(dir.path(), "edge.toml", &interferometer(0.5, 0.3, 0.7));
    let doc = json(&su11(&["compare", "--config", &edge]));
    let v = verdict(&doc, "singles_a", "conditional");
    assert_eq!(v["holds"], false);
    assert!(v["threshold_gain_ratio"].is_null());
}

#[test]
fn injected_fault_is_reported_with_exit_1() {
    let out = su11(&["validate", "--fast", "--inject-fault", "loss-sign"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trace-preservation"), "{stderr}");
    assert!(stderr.contains("counterexample"), "{stderr}");
}

#[test]
fn calibration_recovers_documented_values() {
    let doc = json(&su11(&["calibrate", "--config", &docs("calibrate.toml")]));
    let results = doc["results"].as_array().unwrap();
    let klyshko = results.iter().find(|r| r["method"] == "klyshko").unwrap();
    assert!((klyshko["eta_a"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert!((klyshko["eta_b"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    let fit = results.iter().find(|r| r["method"] == "visibility-fit").unwrap();
    assert!((fit["t_a"].as_f64().unwrap() - 0.9).abs() < 1e-9);
    assert!((fit["t_b"].as_f64().unwrap() - 0.85).abs() < 1e-9);
    assert!(!doc["recommendation"].is_null());
}

#[test]
fn divergent_fit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = "g1 = 0.05\nresidual_ceiling = 1e-6\n\n\
        [[visibility]]\ng2 = 0.02\nv_a = 0.1\nv_b = 0.9\nv_cc = 0.2\n\n\
        [[visibility]]\ng2 = 0.05\nv_a = 0.95\nv_b = 0.1\nv_cc = 0.9\n\n\
        [[visibility]]\ng2 = 0.1\nv_a = 0.2\nv_b = 0.8\nv_cc = 0.1\n";
    let cfg = write(dir.path(), "cal.toml", body);
    let out = su11(&["calibrate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn csv_and_json_formats_are_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "probe.toml", &interferometer(0.05, 0.9, 0.8));
    let out = su11(&["--format", "csv", "probe", "--config", &cfg]);
    assert!(out.status.success());
    assert!(!out.stdout.starts_with(b"{"));
    let path = dir.path().join("report.json");
    let out = su11(&["validate", "--fast", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert!(report["outcomes"].as_array().unwrap().len() >= 20);
}
