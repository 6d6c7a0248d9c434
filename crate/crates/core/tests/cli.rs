use std::process::{Command, Output};

use qpcocycle::arithmetic::ContinuedFraction;
use serde_json::Value;

fn qpcocycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpcocycle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn cfrac_golden_has_fibonacci_denominators() {
    let v = json_of(&qpcocycle(&["cfrac", "--alpha", "golden", "--depth", "10"]));
    let q: Vec<i64> = serde_json::from_value(v["q"].clone()).unwrap();
    assert_eq!(q, [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    let cf: qpcocycle::arithmetic::ContinuedFractionJson = serde_json::from_value(v).unwrap();
    ContinuedFraction::from_json(&cf).unwrap().verify(1e-10).unwrap();
}

#[test]
fn cfrac_rational_exits_with_domain_code() {
    let out = qpcocycle(&["cfrac", "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rational"));
}

#[test]
fn lyapunov_free_and_herman() {
    let free = json_of(&qpcocycle(&["lyapunov", "--potential", "zero", "-E", "3"]));
    assert!((free["value"].as_f64().unwrap() - 0.9624).abs() < 1e-3);
    let amo = json_of(&qpcocycle(&["lyapunov", "--potential", "amo:4", "-E", "0"]));
    assert!(amo["value"].as_f64().unwrap() >= 2f64.ln() - 0.02);
}

#[test]
fn malformed_inputs_exit_with_code_2() {
    for args in [
        &["lyapunov", "--potential", "amo:"][..],
        &["lyapunov", "--alpha", "bronze"],
        &["rotnum", "--map", "winding:1"],
        &["spectrum", "--lambda", "1", "--dE", "0"],
        &["renorm", "--csv", "--map", "nonsense:1"],
    ] {
        assert_eq!(qpcocycle(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn budget_overrun_exits_with_code_3() {
    let out = qpcocycle(&["renorm", "--map", "rotation:0.2", "--depth", "40"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("depth 40"));
}

#[test]
fn same_seed_same_bytes() {
    let args = ["lyapunov", "--potential", "amo:1.5", "-E", "0.3", "--seed", "7", "--samples", "8"];
    let (a, b) = (qpcocycle(&args), qpcocycle(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_count_does_not_change_output() {
    let base = ["spectrum", "--lambda", "1", "--dE", "0.05", "--grid", "64", "--n-max", "512", "--n-iter", "4096"];
    let one = qpcocycle(&[&base[..], &["--threads", "1"]].concat());
    let four = qpcocycle(&[&base[..], &["--threads", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn out_file_gets_a_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rho.json");
    let status = qpcocycle(&["rotnum", "--potential", "zero", "-E", "1", "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let rho: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // E = 2cos 2πω with ω = 1/6
    assert!((rho["value"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-4);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rho.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "rotnum");
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["params"]["energy"], 1.0);
    assert!(manifest["timestamp"].is_string());
}

#[test]
fn spectrum_measure_column_sums_to_the_measure() {
    let out = qpcocycle(&["spectrum", "--lambda", "0", "--dE", "0.01", "--grid", "64", "--n-max", "1024", "--n-iter", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("E,class,measure,L,L_spread,rho,rho_spread"));
    let total: f64 = lines.map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 4.0).abs() < 0.05, "{total}");
}

#[test]
fn butterfly_is_energy_symmetric() {
    let out = qpcocycle(&["butterfly", "--lambda", "2", "--grid", "8x64", "--cone-grid", "64", "--n-max", "1024"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8 * 64);
    for col in rows.chunks(64) {
        let classes: Vec<&str> = col.iter().map(|r| r[2]).collect();
        let mirrored: Vec<&str> = classes.iter().rev().copied().collect();
        assert_eq!(classes, mirrored);
    }
}

#[test]
fn reduce_constructed_example() {
    let v = json_of(&qpcocycle(&["reduce", "--map", "conjugated-rotation:0.15:0.1"]));
    assert_eq!(v["final"]["outcome"], "reduced");
    assert!(v["final"]["residual_total"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["depths"].as_array().unwrap().len(), 5);
}

#[test]
fn renorm_csv_lists_window_samples() {
    let out = qpcocycle(&["renorm", "--map", "rotation:0.2", "--depth", "3", "--samples", "16", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("x,g10_a"));
}

#[test]
fn csv_refused_for_scalar_outputs() {
    assert_eq!(qpcocycle(&["rotnum", "--csv"]).status.code(), Some(2));
}
