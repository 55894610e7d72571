use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tht(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tht"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn discretize_then_spectrum_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("m");
    let o = tht(
        &d,
        &[
            "discretize",
            "--kind",
            "uniform",
            "--n",
            "151",
            "--step",
            "0.04",
            "--csv",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&d)["parameters"]["rows"], 151);
    let csv = fs::read_to_string(d.join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 151);

    let s = tmp.path().join("s");
    let input = d.join("matrix.bin");
    let o = tht(&s, &["spectrum", "--in", input.to_str().unwrap(), "--vectors", "0,75"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sig = fs::read_to_string(s.join("sigmas.csv")).unwrap();
    let mut lines = sig.lines();
    assert_eq!(lines.next(), Some("index,sigma"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 151);
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    assert!(s.join("vectors/f_75.csv").exists() && s.join("vectors/g_0.csv").exists());
    let m = manifest(&s);
    assert_eq!(m["passed"], true);
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn eigensolve_writes_each_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tht(tmp.path(), &["eigensolve", "--count", "3", "--series-order", "45"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..3 {
        let j: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join(format!("eigenpairs/eigen_{k}.json"))).unwrap())
                .unwrap();
        assert_eq!(j["series_order"], 45);
        assert!((j["norm"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        assert!(j["psi_at_a2"].as_f64().unwrap() > 0.0);
        assert!(tmp.path().join(format!("eigenpairs/eigen_{k}.csv")).exists());
    }
    let lambdas = fs::read_to_string(tmp.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(lambdas.lines().count(), 4);
}

#[test]
fn reproduce_is_deterministic_and_checks_zero_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = tht(d, &["reproduce", "fig5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["fig5_f.csv", "fig5_g.csv", "fig5_summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let header = fs::read_to_string(a.join("fig5_f.csv")).unwrap();
    assert!(header.starts_with("x,f448,f449,f450,f451\n"));
}

#[test]
fn fig4a_spectrum_spans_zero_to_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tht(tmp.path(), &["reproduce", "fig4a"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sig = fs::read_to_string(tmp.path().join("fig4a_sigmas.csv")).unwrap();
    assert_eq!(sig.lines().count(), 602);
}

#[test]
fn accumulation_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("acc.json");
    let o = tht(
        tmp.path(),
        &[
            "verify",
            "--suite",
            "accumulation",
            "--json-out",
            report.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r[0]["check"], "accumulation");
    assert_eq!(r[0]["passed"], true);
}

#[test]
fn failing_checks_give_nonzero_exit_and_a_failure_list() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tht(tmp.path(), &["verify", "--suite", "logfit"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert_eq!(err["command"], "verify");
    assert!(!err["failures"].as_array().unwrap().is_empty());
    assert_eq!(manifest(tmp.path())["passed"], false);
}

#[test]
fn acceptance_subset_prints_one_line_per_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tht(tmp.path(), &["acceptance", "--only", "1,2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("PASS criterion 1"));
    assert!(lines[1].starts_with("PASS criterion 2"));
    let grid = manifest(tmp.path())["parameters"]["grid_convention"]
        .as_str()
        .unwrap()
        .to_string();
    assert!(grid.contains("n = 601"), "{grid}");
}

#[test]
fn invalid_configuration_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "a1 = 0.0\na2 = 5.0\na3 = 2.0\na4 = 7.5\n").unwrap();
    let o = tht(tmp.path(), &["--config", cfg.to_str().unwrap(), "eigensolve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a1 < a2 < a3 < a4"));
}

#[test]
fn json_configuration_changes_the_geometry() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"a1": 0.0, "a2": 1.0, "a3": 3.0, "a4": 4.0}"#).unwrap();
    let o = tht(
        tmp.path(),
        &["--config", cfg.to_str().unwrap(), "eigensolve", "--count", "2"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(tmp.path())["config"]["a3"], 3.0);
}
