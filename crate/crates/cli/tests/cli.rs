use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn parcyl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parcyl")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    parcyl(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(parcyl(&[]).status.code(), Some(2));
    assert_eq!(parcyl(&["frobnicate"]).status.code(), Some(2));

    for bad in ["", "{\"n_maks\": 5}", "{\"n_max\": 0}", "{\"theta\": \"pi\"}", "[1, 2"] {
        let cfg = config(tmp.path(), bad);
        let o = run_in(&tmp.path().join("out"), &["orbit", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "config {bad:?}: {}", stderr(&o));
    }
    let o = run_in(tmp.path(), &["orbit", "--config", "/no/such/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = run_in(&file.join("sub"), &["diophantine"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn diophantine_golden_and_resonant() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["diophantine"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = json(&tmp.path().join("diophantine.json"));
    assert_eq!(d["resonant"], false);
    assert!((d["c"].as_f64().unwrap() - 1.8641).abs() < 1e-3);

    let res = tmp.path().join("res");
    let o = run_in(&res, &["diophantine", "--theta", "cf:4"]);
    assert_eq!(o.status.code(), Some(1));
    let d = json(&res.join("diophantine.json"));
    assert_eq!(d["resonant"], true);
    let m = json(&res.join("manifest.json"));
    assert_eq!(m["pass"], false);
    assert_eq!(m["config"]["theta"], "cf:4");
}

#[test]
fn orbit_on_the_axis_stays_there() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"point": [[0, 0], [0.3, 0.1]], "n_max": 50}"#);
    let o = run_in(&tmp.path().join("out"), &["orbit", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("out/orbit.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,re_z,im_z,re_w,im_w,re_u,im_u,w_dev"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 51);
    for r in &rows {
        assert_eq!(r.len(), 8);
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        let w = (r[3].parse::<f64>().unwrap().powi(2) + r[4].parse::<f64>().unwrap().powi(2)).sqrt();
        assert!((w - (0.1f64.hypot(0.3))).abs() < 1e-12);
    }
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let names = ["orbit.csv", "manifest.json", "map/map_check.json", "map/manifest.json"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = run_in(tmp.path(), &["orbit", "--n-max", "2000"]);
        assert_eq!(o.status.code(), Some(0));
        let o = run_in(&tmp.path().join("map"), &["map-check", "--threads", "2"]);
        assert_eq!(o.status.code(), Some(1));
        runs.push(names.map(|n| fs::read(tmp.path().join(n)).unwrap()));
    }
    for (i, name) in names.iter().enumerate() {
        assert_eq!(runs[0][i], runs[1][i], "{name}");
    }
}

#[test]
fn manifest_records_overrides() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"n_max": 500, "precision": "double"}"#);
    let out = tmp.path().join("out");
    let o = run_in(&out, &["orbit", "--config", &cfg, "--n-max", "300", "--precision", "double-double"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "orbit");
    assert_eq!(m["config"]["n_max"], 300);
    assert_eq!(m["config"]["precision"], "double-double");
    assert_eq!(m["outputs"][0], "orbit.csv");
    assert!((m["chain"]["a"][0].as_f64().unwrap() + 0.5).abs() < 1e-6);
}

#[test]
fn fit_a_agrees_with_the_chain() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["fit-a"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fit = json(&tmp.path().join("fit_a.json"));
    let m = json(&tmp.path().join("manifest.json"));
    let chain_a = m["chain"]["a"][0].as_f64().unwrap();
    assert!((fit["a"][0].as_f64().unwrap() - chain_a).abs() < 1e-2);
}

#[test]
fn fatou_and_basin_defaults() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(&tmp.path().join("fatou"), &["fatou"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f = json(&tmp.path().join("fatou/fatou.json"));
    assert_eq!(f["converged"], true);
    assert!(f["functional_equation_residual"].as_f64().unwrap() <= 1e-3);

    let cfg = config(tmp.path(), r#"{"window": {"nx": 64, "ny": 64}}"#);
    let o = run_in(&tmp.path().join("basin"), &["basin", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let pgm = fs::read(tmp.path().join("basin/basin.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    let m = json(&tmp.path().join("basin/manifest.json"));
    assert!(m["summary"]["inside"].as_f64().unwrap() >= 0.01);
    assert!(m["summary"]["inside_components"].as_u64().unwrap() >= 1);
}

#[test]
fn map_check_round_trip() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(&tmp.path().join("wide"), &["map-check"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("map.round_trip"));

    let cfg = config(tmp.path(), r#"{"map_check": {"z_radius": 0.5}}"#);
    let o = run_in(&tmp.path().join("narrow"), &["map-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn verify_default_passes() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&tmp.path().join("verify.json"));
    assert_eq!(v["pass"], true);
    assert!(v["warnings"].as_array().unwrap().is_empty());
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for want in ["rotation.diophantine", "map.coefficients", "normal_form.h_residual", "orbits.a_fit", "fatou.asymptotic_form"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
}

#[test]
fn verify_catches_a_wrong_residue() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"a_perturbation": [0.1, 0]}"#);
    let o = run_in(&tmp.path().join("out"), &["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("fatou.asymptotic_form"), "{err}");
    assert!(err.contains("orbits.a_fit"), "{err}");
}

#[test]
fn short_runs_are_undecided() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["verify", "--n-max", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&tmp.path().join("verify.json"));
    let warnings = v["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().starts_with("fatou.converged undecided")));
    let undecided = v["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "undecided").count();
    assert!(undecided >= 3);
}
