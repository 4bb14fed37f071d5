use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().expect("lab runs")
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run_to(scenario: &Path, out: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec!["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = lab(&args);
    let code = o.status.code().unwrap();
    let report = fs::read_to_string(out.join("report.json"))
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(Value::Null);
    (code, report)
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == name)
        .unwrap_or_else(|| panic!("no {name} record"))
}

const SMALL: &str = "\
space.m = 2
space.alpha = 1
space.r_max = 100
domain.R = 1
checks = cd-scan, bishop-gromov, avr, neumann, lemma1, transport, riccati
transport.base = 0.5
grid.bg.points = 32
ar.radial = 16
ar.angular = 8
neumann.cells = 256
";

#[test]
fn gaussian_density_is_hypothesis_violated_not_failed() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, report) = run_to(&scenarios().join("gaussian_density.lab"), tmp.path(), &[]);
    assert_eq!(code, 0);
    assert_eq!(report["hypothesis"]["verdict"], "violated");
    let bg = check(&report, "bishop-gromov");
    assert_eq!(bg["status"], "hypothesis-violated");
    let notes = bg["notes"].to_string();
    assert!(notes.contains("hypothesis violated, monotonicity not required"), "{notes}");
    let at = &bg["hypothesis_violation"];
    assert!((at["zero_crossing"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    assert!(at["min_eigenvalue"].as_f64().unwrap() < 0.0);
    for f in ["meta.json", "series/bishop_gromov_ball.csv", "plots/bishop_gromov_ball.svg", "series/cd_scan.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn hyperbolic_violations_are_recorded_as_data() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, report) = run_to(&scenarios().join("hyperbolic.lab"), tmp.path(), &[]);
    assert_eq!(code, 0);
    let bg = check(&report, "bishop-gromov");
    let v = bg["violations"].as_array().unwrap();
    assert!(!v.is_empty());
    assert!(v[0]["t"].as_f64().unwrap() > 0.0 && v[0]["tolerance"].as_f64().unwrap() > 0.0);
}

#[test]
fn malformed_scenario_exits_two_with_line_and_field() {
    let o = lab(&["run", scenarios().join("malformed.lab").to_str().unwrap(), "--out", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("space.warp.beta"), "{err}");

    let tmp = tempfile::tempdir().unwrap();
    let bad = write_scenario(tmp.path(), "bad.lab", "space.m = 2\nspace.alpha = 1\nspace.density = nope\n");
    let o = lab(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("space.density"), "{err}");

    let o = lab(&["run", scenarios().join("flat_benchmark.lab").to_str().unwrap(), "--tol-scale", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "small.lab", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_to(&sc, &a, &["--seed", "11"]).0, 0);
    assert_eq!(run_to(&sc, &b, &["--seed", "11"]).0, 0);
    let mut files = vec![PathBuf::from("report.json")];
    for sub in ["series", "plots"] {
        for e in fs::read_dir(a.join(sub)).unwrap() {
            files.push(Path::new(sub).join(e.unwrap().file_name()));
        }
    }
    assert!(files.len() > 5);
    for f in files {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{}", f.display());
    }
    let meta: Value = serde_json::from_str(&fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    assert!(meta["started_unix"].as_u64().unwrap() > 0);
    let report = fs::read_to_string(a.join("report.json")).unwrap();
    assert!(!report.contains("unix"));
}

#[test]
fn seed_and_tolerance_scale_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "small.lab", SMALL);
    let (_, r) = run_to(&sc, &tmp.path().join("o"), &["--seed", "5", "--tol-scale", "10"]);
    assert_eq!(r["scenario"]["seed"], 5);
    assert_eq!(r["scenario"]["tol_scale"], 10.0);
    let bg = check(&r, "bishop-gromov");
    assert!((bg["tolerance"]["monotone_rel"].as_f64().unwrap() - 1e-8).abs() < 1e-20);
}

#[test]
fn every_passing_record_names_tolerance_and_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "small.lab", SMALL);
    let (code, r) = run_to(&sc, &tmp.path().join("o"), &[]);
    assert_eq!(code, 0);
    for c in r["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass", "{}", c["check"]);
        assert!(c["tolerance"].is_object(), "{}", c["check"]);
        assert!(c["grid"].is_object(), "{}", c["check"]);
    }
}

#[test]
fn explore_flat_rows_have_zero_margin_and_avr() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&[
        "explore",
        scenarios().join("flat_family.fam").to_str().unwrap(),
        "--budget",
        "10",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let t: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("explore.json")).unwrap()).unwrap();
    let rows = t["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r["cd_margin"].as_f64().unwrap(), 0.0);
        let (avr, err) = (r["avr"].as_f64().unwrap(), r["avr_error"].as_f64().unwrap());
        assert!(avr.abs() <= err.max(1e-12), "{avr} {err}");
    }
    assert_eq!(t["positive_avr_rows"], 0);
    assert!(tmp.path().join("explore.csv").exists());
}

#[test]
fn explore_excludes_gaussian_rows_and_honours_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&[
        "explore",
        scenarios().join("mixed_family.fam").to_str().unwrap(),
        "--budget",
        "10",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let t: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("explore.json")).unwrap()).unwrap();
    for r in t["rows"].as_array().unwrap() {
        let gaussian = r["density"] == "gaussian_density";
        assert_eq!(r["excluded"].as_bool().unwrap(), gaussian);
        if gaussian {
            assert!(r["cd_margin"].as_f64().unwrap() < 0.0);
        }
    }
    let o = lab(&["explore", scenarios().join("power_family.fam").to_str().unwrap(), "--budget", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    // Header, one row, summary.
    assert_eq!(text.lines().count(), 3, "{text}");
}

#[test]
fn presets_are_listed() {
    let o = lab(&["presets"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["euclidean", "hyperbolic_like", "capped_power", "gaussian_density", "power_density", "spline"] {
        assert!(text.contains(name));
    }
}
