use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use carleman_core::ledger::{ledger_table, LedgerCoefficients};
use carleman_lab::io::read_field;

fn lab(config: &str, dir: &Path, extra: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_carleman-lab"))
        .arg("run")
        .arg(&path)
        .args(extra)
        .env("CARLEMAN_LAB_OUT", dir.join("out"))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn identity_defaults_pass_and_write_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(r#"{"experiment": "identity", "parameters": {"dump_fields": true}}"#, dir.path(), &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("criterion  1 PASS"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/identity_report.json")).unwrap()).unwrap();
    let ratios = report["report"]["refinement_ratios"].as_array().unwrap();
    assert_eq!(ratios.len(), 10);
    // Defaults are materialized in the embedded config.
    assert_eq!(report["config"]["parameters"]["count"], 10);
    assert_eq!(report["config"]["grid"]["nt"], 129);
    let field = read_field(&dir.path().join("out/identity_member0.f64")).unwrap();
    assert_eq!((field.grid.nt, field.grid.nx), (129, 129));
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(r#"{"experiment": "teleport"}"#, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("teleport"));
    let o = lab(r#"{"experiment": "ledger", "parameters": {"deltas": []}}"#, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_carleman-lab")).args(["run", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

fn ledger_rows(dir: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(dir.join("out/ledger_table.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..5], ["delta", "k_delta", "log_blowup_closed", "log_blowup_end_to_end", "n"]);
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn ledger_table_matches_the_closed_form_row_by_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"experiment": "ledger", "parameters": {"deltas": [0.5, 0.4, 0.3], "n": 1.0}}"#;
    let o = lab(cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = ledger_rows(dir.path());
    assert_eq!(rows.len(), 3);
    let lib = ledger_table(&[0.5, 0.4, 0.3], 1.0, &LedgerCoefficients::default()).unwrap();
    for ((row, d), want) in rows.iter().zip([0.5f64, 0.4, 0.3]).zip(&lib) {
        assert_eq!(row[0].parse::<f64>().unwrap(), d);
        let closed = row[2].parse::<f64>().unwrap();
        // The text round-trips the library value bit for bit ...
        assert_eq!(closed, want.log_closed);
        // ... which is (N / delta^4) log(1/delta) up to the last bit of the
        // logarithm (the core's libm and the platform's may differ there).
        let independent = 1.0 / d.powi(4) * (1.0 / d).ln();
        assert!((closed / independent - 1.0).abs() <= 1e-15, "delta {d}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"experiment": "stability", "parameters": {"nx": 401}}"#;
    let read_all = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(dir.join("out"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let report = |dir: &Path| -> serde_json::Value {
        let text = fs::read_to_string(dir.join("out/stability_report.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["generated_at"].as_str().unwrap().starts_with("unix:"));
        v["generated_at"] = serde_json::Value::Null;
        v
    };
    lab(cfg, dir.path(), &["--threads", "3"]);
    let (first, first_report) = (read_all(dir.path()), report(dir.path()));
    lab(cfg, dir.path(), &["--threads", "1"]);
    assert_eq!(first.len(), 4);
    assert_eq!(first, read_all(dir.path()));
    // The JSON report differs at most in its timestamp.
    assert_eq!(first_report, report(dir.path()));
}

#[test]
fn failing_items_exit_one_and_guards_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(r#"{"experiment": "carleman", "parameters": {"count": 5}}"#, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("criterion  2 PASS") && out.contains("criterion  3 FAIL"), "{out}");

    // Bumps reaching below the inner radius trip the support guard.
    let cfg = r#"{"experiment": "carleman",
                  "parameters": {"count": 3, "window": {"t": [-0.4, 0.4], "r": [0.5, 2.4], "max_wavenumber": 4.0},
                                 "positivity_grid": {"t_min": -0.5, "t_max": 0.5, "x_min": 0.4, "x_max": 2.5, "nt": 65, "nx": 65}}}"#;
    let o = lab(cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("SupportViolation"));
}

#[test]
fn exploratory_experiment_touches_no_item() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(r#"{"experiment": "local-quant", "parameters": {"count": 1}}"#, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no acceptance item"));
    assert!(dir.path().join("out/local_quant_table.csv").exists());
}

#[test]
fn schema_is_printed_without_a_config() {
    let o = Command::new(env!("CARGO_BIN_EXE_carleman-lab")).args(["run", "--print-schema"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let schema: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(schema["properties"]["experiment"]["enum"].as_array().unwrap().iter().any(|v| v == "uc-probe"));
}
