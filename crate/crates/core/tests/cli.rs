// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use magnon_blockade::cli::Config;
use serde_json::Value;

fn magblock(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magblock"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad report ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn effective(delta_p: f64, g: f64, f: f64) -> String {
    format!(
        r#"{{"model": {{"effective": {{"delta_p": {delta_p}, "delta_m": 10, "chi": 0.5, "g": {g}, "F": {f}, "gamma": 0.5}}}},
            "solver": {{"cutoff_p": 6, "cutoff_m": 3}}}}"#
    )
}

#[test]
fn analytic_reports_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.json", &effective(-5.0, 0.5, 0.05));
    let out = magblock(&["analytic", "--config", &cfg], dir.path());
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["X"], 23.0);
    assert_eq!(r["Y"], 45.25);
    assert_eq!(r["Z"], 35.0);
    assert!((r["g2_analytic"].as_f64().unwrap() - 652.3).abs() < 0.05);
    assert_eq!(r["roots"]["umb_delta_p"], -16.5);
    assert!(r["amplitudes"]["c01"]["re"].is_f64());

    // Y = 0: singular amplitudes are reported, exit code stays 0
    let cfg = write(dir.path(), "y.json", &effective(2.0, 5.0, 0.05));
    let out = magblock(&["analytic", "--config", &cfg], dir.path());
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["cmb_condition_satisfied"], true);
    assert_eq!(r["g2_analytic"], 0.0);
    assert!(r["amplitudes"].is_null());
}

#[test]
fn steady_without_drive_is_vacuum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &effective(-5.0, 0.5, 0.0));
    let out = magblock(&["steady", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["g2_magnon"], "NA");
    assert!(r["occupations"]["m"].as_f64().unwrap().abs() < 1e-12);
    assert!(r["occupations"]["p"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["cutoffs"]["p"], 6);
}

#[test]
fn steady_full_model_without_couplings() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"model": {"full": {"delta_p": -2, "delta_s": 50, "delta_m_tilde": 10,
        "g_ms": 0, "J": 0, "F": 0.05, "gamma": 0.5, "kappa_s": 1}},
        "solver": {"cutoff_p": 5, "cutoff_s": 2, "cutoff_m": 2}}"#;
    let cfg = write(dir.path(), "f.json", text);
    let out = magblock(&["steady", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["g2_magnon"], "NA");
    assert!(r["occupations"]["m"].as_f64().unwrap().abs() < 1e-14);
    assert!(r["occupations"]["s"].as_f64().unwrap().abs() < 1e-14);
    assert_eq!(r["cutoffs"]["s"], 2);
}

#[test]
fn cutoff_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &effective(-16.5, 0.5, 0.05));
    let out = magblock(&["steady", "--config", &cfg, "--cutoff-p", "8", "--cutoff-m", "4"], dir.path());
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["cutoffs"]["p"], 8);
    assert_eq!(r["config"]["solver"]["cutoff_m"], 4);
    assert!(r["g2_magnon"].as_f64().unwrap() < 0.1);
}

#[test]
fn reduce_examples_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let full = |ds: f64| {
        format!(
            r#"{{"model": {{"full": {{"delta_p": 0, "delta_s": {ds}, "delta_m_tilde": 11,
                "g_ms": 10, "J": 10, "F": 0.05, "gamma": 0.5}}}}}}"#
        )
    };
    let cfg = write(dir.path(), "r.json", &full(100.0));
    let r = report(&magblock(&["reduce", "--config", &cfg], dir.path()));
    assert_eq!(r["effective"]["g"], -1.0);
    assert_eq!(r["effective"]["chi"], -1.0);
    assert_eq!(r["effective"]["delta_m"], 10.0);
    assert_eq!(r["validity_ratio"], 10.0);
    assert_eq!(r["warning"], false);

    let cfg = write(dir.path(), "r5.json", &full(50.0));
    assert_eq!(report(&magblock(&["reduce", "--config", &cfg], dir.path()))["warning"], true);

    let cfg = write(dir.path(), "r0.json", &full(0.0));
    let out = magblock(&["reduce", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("division by zero"));
}

#[test]
fn config_errors_exit_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &effective(-5.0, 0.5, 0.05).replace("\"gamma\"", "\"gama\""));
    let out = magblock(&["analytic", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("model.effective"), "{err}");

    let out = magblock(&["steady"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_echo_reparses_to_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write(dir.path(), "a.json", &effective(-5.0, 0.5, 0.05));
    let r = report(&magblock(&["analytic", "--config", &cfg_path, "--seed", "9"], dir.path()));
    let echoed = Config::from_json(&r["config"].to_string()).unwrap();
    let mut original = Config::load(Path::new(&cfg_path)).unwrap();
    original.seed = Some(9);
    assert_eq!(echoed, original);
}

const SWEEP: &str = r#"{
    "model": {"effective": {"delta_p": 0, "delta_m": 10, "chi": 0.5, "g": 0.5, "F": 0.05, "gamma": 0.5}},
    "solver": {"cutoff_p": 6, "cutoff_m": 3},
    "sweep": {"axes": [{"field": "delta_p", "start": -17, "stop": -16, "points": 2}]},
    "output": {"csv": "out.csv"}
}"#;

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SWEEP);
    let out = magblock(&["sweep", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("out.csv")).unwrap();

    let out = magblock(&["sweep", "--config", &cfg, "--out", "again.csv"], dir.path());
    assert!(out.status.success());
    assert_eq!(report(&out)["runs"][0]["rows"], 2);
    let second = std::fs::read(dir.path().join("again.csv")).unwrap();
    assert_eq!(first, second);

    let text = String::from_utf8(first).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 3);
    assert_eq!(data[0], "delta_p,g2_numeric,g2_analytic,n_magnon,n_photon,residual");
    assert!(data[1].starts_with("-17,") && data[2].starts_with("-16,"));
}

#[test]
fn sweep_runs_write_one_csv_each() {
    let dir = tempfile::tempdir().unwrap();
    let text = SWEEP.replace(
        r#""points": 2}]}"#,
        r#""points": 2}], "runs": [{"label": "chi_plus", "overrides": {"chi": 1}},
                                   {"label": "chi_minus", "overrides": {"chi": -1}}]}"#,
    );
    let cfg = write(dir.path(), "s.json", &text);
    let out = magblock(&["sweep", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for label in ["chi_plus", "chi_minus"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("out_{label}.csv"))).unwrap();
        let chi = if label == "chi_plus" { "\"chi\":1.0" } else { "\"chi\":-1.0" };
        assert!(csv.lines().next().is_some());
        assert!(csv.lines().any(|l| l.starts_with("# spec:") && l.contains(chi)), "{csv}");
    }
}

#[test]
fn bundled_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b"] {
        let c = Config::load(&root.join(format!("{name}.json"))).unwrap();
        assert!(c.sweep.is_some(), "{name}");
        assert_eq!(c.kappa_mhz, 2.0);
        let p = c.effective().unwrap();
        assert_eq!((p.kappa, p.gamma, p.delta_m, p.f), (1.0, 0.5, 10.0, 0.05));
    }
}

#[test]
fn validate_detects_mutation_and_under_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let out = magblock(&["validate", "--cutoff-p", "4", "--cutoff-m", "2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["passed"], false);
    assert_eq!(r["checks"][3]["name"], "truncation convergence");
    assert_eq!(r["checks"][3]["passed"], false);

    let out = magblock(&["validate", "--cutoff-p", "8", "--cutoff-m", "4", "--mutate-kerr-sign"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["checks"][0]["passed"], true);
    assert_eq!(r["checks"][1]["passed"], false);
}

#[test]
fn validate_default_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = magblock(&["validate", "--seed", "5"], dir.path());
    let r = report(&out);
    assert_eq!(r["seed"], 5);
    assert!(out.status.success(), "{}", serde_json::to_string_pretty(&r).unwrap());
}
