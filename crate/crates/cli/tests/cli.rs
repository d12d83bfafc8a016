use std::process::{Command, Output};

use serde_json::Value;

fn qjump(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qjump"))
        .args(args)
        .env("QJUMP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = qjump(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn header_value<'a>(csv: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("# {key}: ");
    csv.lines().find_map(|l| l.strip_prefix(prefix.as_str()))
}

#[test]
fn fig1_panels_carry_their_ratios() {
    for (panel, ratio) in [("a", 3.33), ("b", 1.0 / 6.0)] {
        let csv = stdout_ok(&["fig1", "--panel", panel, "--no-timestamp"]);
        let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(
            header,
            "panel,omega_over_gamma,omega_tau,tau,ell_kolmogorov,ell_baseline"
        );
        let rows = data_rows(&csv);
        assert!(rows.len() > 100);
        let mut peak = (0.0f64, 0.0f64);
        for r in &rows {
            assert_eq!(r[0], panel);
            let got: f64 = r[1].parse().unwrap();
            assert!((got - ratio).abs() < 1e-12);
            let k: f64 = r[4].parse().unwrap();
            let b: f64 = r[5].parse().unwrap();
            assert!(k >= 0.0 && b >= 0.0);
            peak = (peak.0.max(k), peak.1.max(b));
        }
        assert!(peak.0 > 0.0 && peak.1 > 0.0);
        assert!(header_value(&csv, "seed").is_some());
        assert!(header_value(&csv, "generated").is_none());
    }
}

#[test]
fn fig1_without_panel_writes_both() {
    let csv = stdout_ok(&["fig1", "--no-timestamp"]);
    let rows = data_rows(&csv);
    assert!(rows.iter().any(|r| r[0] == "a"));
    assert!(rows.iter().any(|r| r[0] == "b"));
}

#[test]
#[allow(clippy::approx_constant)]
fn no_pump_emission_fraction() {
    let out = stdout_ok(&[
        "mc", "--omega", "0", "--theta0", "0.7854", "--n", "100000", "--format", "json",
    ]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    let frac = doc["result"]["ever_emitted_fraction"].as_f64().unwrap();
    let expected = 0.7854f64.sin().powi(2);
    let sigma = (expected * (1.0 - expected) / 1e5).sqrt();
    assert!((frac - expected).abs() < 3.0 * sigma, "{frac}");
    assert_eq!(doc["config"]["seed"], 42);
    assert!(doc["generated"].is_string());
}

#[test]
fn outputs_are_reproducible_without_timestamp() {
    let cases: [&[&str]; 3] = [
        &["mc", "--n", "500", "--horizon", "20", "--no-timestamp"],
        &["mc", "--n", "500", "--horizon", "20", "--format", "json", "--no-timestamp"],
        &["pde", "--horizon", "5", "--no-timestamp"],
    ];
    for args in cases {
        assert_eq!(stdout_ok(args), stdout_ok(args), "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["mc", "--n", "2000", "--horizon", "30", "--semantics", "emission", "--no-timestamp"];
    let one = Command::new(env!("CARGO_BIN_EXE_qjump"))
        .args(args)
        .env("QJUMP_THREADS", "1")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(String::from_utf8(one.stdout).unwrap(), stdout_ok(&args));
}

#[test]
fn seed_changes_mc_output() {
    let base = ["mc", "--n", "200", "--horizon", "20", "--no-timestamp"];
    let a = stdout_ok(&base);
    let b = stdout_ok(&[&base[..], &["--seed", "7"]].concat());
    assert_ne!(data_rows(&a), data_rows(&b));
}

#[test]
fn mc_csv_lists_emissions() {
    let csv = stdout_ok(&["mc", "--n", "50", "--horizon", "10", "--no-timestamp"]);
    assert_eq!(
        csv.lines().find(|l| !l.starts_with('#')).unwrap(),
        "trajectory_id,emission_time"
    );
    for r in data_rows(&csv) {
        let id: usize = r[0].parse().unwrap();
        let t: f64 = r[1].parse().unwrap();
        assert!(id < 50 && (0.0..=10.0).contains(&t));
    }
}

#[test]
fn mc_emission_json_reports_ks() {
    let out = stdout_ok(&[
        "mc", "--semantics", "emission", "--n", "200", "--format", "json", "--no-timestamp",
    ]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    let ks = &doc["result"]["ks_vs_analytic"];
    assert!(ks["p_value"].as_f64().unwrap() > 0.01);
    assert!(doc.get("generated").is_none());
}

#[test]
fn remaining_commands_run() {
    let pde = stdout_ok(&["pde", "--horizon", "5", "--no-timestamp"]);
    for r in data_rows(&pde) {
        let rho0: f64 = r[1].parse().unwrap();
        let rho1: f64 = r[2].parse().unwrap();
        assert!((rho0 + rho1 - 1.0).abs() < 1e-9);
    }
    let field = stdout_ok(&["pde", "--horizon", "1", "--field", "--grid-n", "64", "--no-timestamp"]);
    assert_eq!(data_rows(&field).len(), 64);

    let delay = stdout_ok(&["delay", "--no-timestamp"]);
    assert!(data_rows(&delay).iter().all(|r| r[2] == "analytic"));
    let delay_json: Value =
        serde_json::from_str(&stdout_ok(&["delay", "--format", "json", "--no-timestamp"])).unwrap();
    assert!(delay_json["result"].is_object());

    let baseline = stdout_ok(&["baseline", "--no-timestamp"]);
    assert!(data_rows(&baseline).len() > 100);

    let sweep = stdout_ok(&["sweep", "--points", "3", "--no-timestamp"]);
    assert_eq!(data_rows(&sweep).len(), 3);
}

#[test]
fn writes_to_file_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("delay.csv");
    let p = path.to_str().unwrap();
    let out = stdout_ok(&["delay", "--out", p]);
    assert!(out.is_empty());
    let body = std::fs::read_to_string(&path).unwrap();
    assert_eq!(header_value(&body, "command"), Some("delay"));
    assert!(header_value(&body, "generated").is_some());
}

#[test]
fn invalid_input_fails() {
    let cases: [&[&str]; 6] = [
        &["delay", "--gamma", "-1"],
        &["delay", "--omega", "0"],
        &["mc", "--semantics", "bogus"],
        &["pde", "--grid-n", "15"],
        &["pde", "--dt", "10"],
        &["nonsense"],
    ];
    for args in cases {
        let out = qjump(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn unwritable_output_fails() {
    let out = qjump(&["delay", "--out", "/nonexistent-dir/x.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write"));
}
