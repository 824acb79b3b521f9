mod common;

use std::fs;

use common::{bin, load, run, s, shipped, stderr, stdout, write_config};
use serde_json::{json, Value};
use tempfile::tempdir;

#[test]
fn validate_accepts_shipped_configs() {
    for name in [
        "two_patch.json",
        "three_patch_volumes.json",
        "neutral_single_patch.json",
    ] {
        let out = run(&["validate", s(&shipped(name))]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
        assert!(stdout(&out).contains("ok"));
    }
}

#[test]
fn validate_names_subcritical_patch() {
    let dir = tempdir().unwrap();
    let mut cfg = load("two_patch.json");
    cfg["patches"][1]["beta"] = json!(1.0);
    let out = run(&["validate", s(&write_config(dir.path(), "c.json", &cfg))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("patch 1: subcritical"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn validate_names_metzler_violation() {
    let dir = tempdir().unwrap();
    let mut cfg = load("two_patch.json");
    cfg["connectivity"]["matrix"] = json!([[1.0, -1.0], [1.0, -1.0]]);
    let out = run(&["validate", s(&write_config(dir.path(), "c.json", &cfg))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Metzler"), "{}", stderr(&out));
}

#[test]
fn parse_failures_are_usage_errors() {
    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["validate", s(&bad)]).status.code(), Some(2));
    assert_eq!(
        run(&["validate", s(&dir.path().join("missing.json"))])
            .status
            .code(),
        Some(2)
    );
    let mut cfg = load("two_patch.json");
    cfg["unexpected"] = json!(1);
    let p = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(run(&["validate", s(&p)]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", s(&p), "--mode", "sideways"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn equilibria_and_fitness_json() {
    let out = run(&["equilibria", s(&shipped("two_patch.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let p0 = &v["patches"][0];
    assert_eq!(
        (p0["S"].as_f64(), p0["I"].as_f64(), p0["D"].as_f64()),
        (Some(0.5), Some(0.25), Some(0.25))
    );
    assert!((p0["omega"][0].as_f64().unwrap() - 12.0 / 7.0).abs() < 1e-14);

    let out = run(&["fitness", s(&shipped("two_patch.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["migration"][0][1].as_f64().unwrap() - 22.0 / 21.0).abs() < 1e-14);
    assert!((v["patches"][0]["Theta"].as_f64().unwrap() - 37.0 / 7.0).abs() < 1e-13);
    assert_eq!(v["patches"][1]["lambda"][0][0].as_f64(), Some(0.0));
}

#[test]
fn reduced_neutral_run_is_constant() {
    let dir = tempdir().unwrap();
    let cfg = json!({
        "patches": [{"r": 1, "beta": 4, "gamma": 1, "k": 1}],
        "strains": {"n": 3},
        "connectivity": {"matrix": [[0]]},
        "scale": {"eps": 0.1, "d": 0},
        "initial": {"frequencies": [[0.2, 0.3, 0.5]]},
        "run": {"samples": 20}
    });
    let p = write_config(dir.path(), "c.json", &cfg);
    let out_dir = dir.path().join("out");
    let out = run(&["simulate", s(&p), "--mode", "reduced", "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("trajectory_reduced.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,patch,z_1,z_2,z_3,simplex_defect"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(&fields[1..5], &["0", "0.2", "0.3", "0.5"]);
    }
}

#[test]
fn single_strain_full_run_reaches_endemic_point() {
    let dir = tempdir().unwrap();
    let cfg = json!({
        "patches": [{"r": 1, "beta": 4, "gamma": 1, "k": 1}],
        "strains": {"n": 1},
        "connectivity": {"matrix": [[0]]},
        "scale": {"eps": 0, "d": 0},
        "initial": {"seed": 3, "off_manifold": true},
        "run": {"t_end": 200, "samples": 10}
    });
    let p = write_config(dir.path(), "c.json", &cfg);
    let out = run(&["simulate", s(&p), "--mode", "full", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("trajectory_full.csv")).unwrap();
    assert!(csv.starts_with("t,patch,S,I_1,D_11,mass_defect\n"));
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(last[0], 200.0);
    for (got, want) in last[2..5].iter().zip([0.5, 0.25, 0.25]) {
        assert!((got - want).abs() < 1e-6, "{last:?}");
    }
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("manifest_simulate_full.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], json!(3));
    assert_eq!(manifest["outputs"], json!(["trajectory_full.csv"]));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn output_root_precedence() {
    let dir = tempdir().unwrap();
    let cfg = shipped("neutral_single_patch.json");
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let out = bin()
        .args(["simulate", s(&cfg), "--mode", "reduced"])
        .env("STRAINGRID_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("trajectory_reduced.csv").exists());
    let out = bin()
        .args([
            "simulate",
            s(&cfg),
            "--mode",
            "reduced",
            "--out",
            s(&flag_dir),
        ])
        .env("STRAINGRID_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.join("trajectory_reduced.csv").exists());
    let out = bin()
        .current_dir(dir.path())
        .args(["simulate", s(&cfg), "--mode", "reduced"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir
        .path()
        .join("straingrid-out/trajectory_reduced.csv")
        .exists());
}

#[test]
fn config_hash_ignores_key_order() {
    let dir = tempdir().unwrap();
    let cfg = load("two_patch.json");
    let a = write_config(dir.path(), "a.json", &cfg);
    // Same document with keys written in reverse order.
    let reversed = {
        let text = fs::read_to_string(&a).unwrap();
        let v: serde_json::Map<String, Value> = serde_json::from_str(&text).unwrap();
        let mut out = String::from("{");
        let items: Vec<String> = v.iter().rev().map(|(k, v)| format!("{k:?}: {v}")).collect();
        out.push_str(&items.join(", "));
        out.push('}');
        out
    };
    let b = dir.path().join("b.json");
    fs::write(&b, reversed).unwrap();
    let hash = |p: &std::path::Path, out: &str| {
        let o = dir.path().join(out);
        assert_eq!(
            run(&["simulate", s(p), "--mode", "reduced", "--out", s(&o)])
                .status
                .code(),
            Some(0)
        );
        let m: Value = serde_json::from_str(
            &fs::read_to_string(o.join("manifest_simulate_reduced.json")).unwrap(),
        )
        .unwrap();
        m["config_sha256"].as_str().unwrap().to_string()
    };
    assert_eq!(hash(&a, "oa"), hash(&b, "ob"));
}

#[test]
fn compare_reports_fitted_order() {
    let dir = tempdir().unwrap();
    let out = run(&[
        "compare",
        s(&shipped("two_patch.json")),
        "--eps",
        "0.05,0.025,0.0125",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let order = report["fitted_order"].as_f64().unwrap();
    assert!(order.is_finite() && (0.7..=1.3).contains(&order));
    assert_eq!(report["slope_applicable"], json!(true));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("eps,error,aggregate_deviation\n"));
    let svg = fs::read_to_string(dir.path().join("convergence.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    assert!(dir.path().join("manifest_compare.json").exists());
    let leftovers = fs::read_dir(dir.path()).unwrap().filter(|e| {
        e.as_ref()
            .unwrap()
            .file_name()
            .to_string_lossy()
            .contains(".tmp")
    });
    assert_eq!(leftovers.count(), 0);
}

#[test]
fn compare_neutral_flags_slope() {
    let dir = tempdir().unwrap();
    let cfg = json!({
        "patches": [{"r": 1, "beta": 4, "gamma": 1, "k": 1}, {"r": 0.5, "beta": 2, "gamma": 0.5, "k": 2}],
        "strains": {"n": 2},
        "connectivity": {"matrix": [[-1, 1], [1, -1]]},
        "scale": {"eps": 0.1, "d": 0},
        "initial": {"frequencies": [[0.3, 0.7], [0.6, 0.4]]},
        "run": {"samples": 50}
    });
    let p = write_config(dir.path(), "c.json", &cfg);
    let out = run(&[
        "compare",
        s(&p),
        "--eps",
        "0.1,0.05,0.025",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["slope_applicable"], json!(false));
    assert_eq!(report["fitted_order"], Value::Null);
    assert!(stdout(&out).contains("not applicable"));
}

#[test]
fn compare_usage_errors() {
    let cfg = shipped("two_patch.json");
    assert_eq!(run(&["compare", s(&cfg)]).status.code(), Some(2));
    assert_eq!(
        run(&["compare", s(&cfg), "--eps", "0.1,0.05"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["compare", s(&cfg), "--eps", "0.1,x,0.05"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_over_d() {
    let dir = tempdir().unwrap();
    let out = run(&[
        "sweep",
        s(&shipped("two_patch.json")),
        "--axis",
        "scale.d",
        "--values",
        "0,0.5,2",
        "--jobs",
        "3",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.contains(",ok,")));
    for k in 0..3 {
        let run_dir = dir.path().join(format!("run_{k:03}"));
        assert!(run_dir.join("manifest.json").exists());
        assert!(run_dir.join("trajectory_reduced.csv").exists());
    }
}

#[test]
fn sweep_marks_failed_rows() {
    let dir = tempdir().unwrap();
    let out = run(&[
        "sweep",
        s(&shipped("two_patch.json")),
        "--axis",
        "patches.0.beta",
        "--values",
        "4,2,6",
        "--mode",
        "full",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains(",ok,") && rows[2].contains(",ok,"));
    assert!(
        rows[1].contains(",failed,") && rows[1].contains("subcritical"),
        "{}",
        rows[1]
    );
    let m: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("run_001/manifest.json")).unwrap(),
    )
    .unwrap();
    assert!(m["error"].as_str().unwrap().contains("patch 0"));
    assert!(dir.path().join("run_000/trajectory_full.csv").exists());
}

#[test]
fn sweep_rejects_unknown_axis() {
    let dir = tempdir().unwrap();
    for axis in ["scale.q", "patches", "strains.b.9"] {
        let out = run(&[
            "sweep",
            s(&shipped("two_patch.json")),
            "--axis",
            axis,
            "--values",
            "1",
            "--out",
            s(dir.path()),
        ]);
        assert_eq!(out.status.code(), Some(2), "{axis}");
    }
}
