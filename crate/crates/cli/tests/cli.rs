use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use extphase_cli::scenario::sha256_hex;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_extphase"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn trajectory_writes_csv_and_hashed_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["trajectory", "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "trajectory");
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let bytes = std::fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], sha256_hex(&bytes));
        assert_eq!(f["bytes"], bytes.len());
    }
}

#[test]
fn runs_are_deterministic_and_manifest_config_replays() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let o = run(tmp.path(), &["wave", "--out-dir", dir]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files = |d: &str| read_json(&tmp.path().join(d).join("manifest.json"))["files"].clone();
    assert_eq!(files("a"), files("b"));

    let cfg = read_json(&tmp.path().join("a/manifest.json"))["config"].clone();
    let replay = write_config(tmp.path(), "replay.json", &cfg.to_string());
    let o = run(tmp.path(), &["wave", "--config", replay.to_str().unwrap(), "--out-dir", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(files("a"), files("c"));
}

#[test]
fn wave_time_law_slope_is_one_at_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["wave", "--out-dir", "out", "--plot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let law = read_json(&tmp.path().join("out/time_law.json"));
    let slope = law["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() <= 0.01, "slope {slope}");
    assert!(law["relative_mass_drift"].as_f64().unwrap() < 1e-12);
    for svg in ["moments.svg", "density.svg"] {
        assert!(std::fs::read_to_string(tmp.path().join("out").join(svg)).unwrap().starts_with("<svg"));
    }
}

#[test]
fn cfl_violation_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfl.json", r#"{"wave":{"du":10.0}}"#);
    let o = run(tmp.path(), &["wave", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CFL"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn validation_errors_are_aggregated() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{"units":{"c":-1.0},"trajectory":{"du":0.0}}"#);
    let o = run(tmp.path(), &["trajectory", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("units.c") && err.contains("trajectory.du"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo.json", r#"{"units":{"speed":1.0}}"#);
    let o = run(tmp.path(), &["trajectory", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("speed"), "{}", stderr(&o));
}

#[test]
fn fit_on_bundled_table_with_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["fit", "--out-dir", "out", "--plot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let fit = read_json(&out.join("fit.json"));
    for key in ["a", "C", "rms", "n"] {
        assert!(fit.get(key).is_some(), "missing {key} in {fit}");
    }
    assert_eq!(fit["n"], 14);
    let svg = std::fs::read_to_string(out.join("fit.svg")).unwrap();
    assert!(svg.contains("width_mev") && svg.contains("ratio"));
    let lifetime = std::fs::read_to_string(out.join("lifetime.csv")).unwrap();
    assert!(lifetime.starts_with("name,ratio,bound_ok\n"));
}

#[test]
fn strict_mode_rejects_a_bad_table_row() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("table.csv");
    std::fs::write(
        &table,
        "name,class,mass_mev,width_mev,source\n\
         a,meson,775,149,x\nb,meson,1020,4.25,x\nc,meson,1275,186,x\nbad,meson,900,0,x\n",
    )
    .unwrap();
    let cfg = write_config(
        tmp.path(),
        "fit.json",
        &serde_json::json!({ "fit": { "table": table } }).to_string(),
    );
    let cfg = cfg.to_str().unwrap();

    let o = run(tmp.path(), &["fit", "--config", cfg, "--out-dir", "lenient"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = read_json(&tmp.path().join("lenient/fit.json"));
    assert_eq!(fit["n"], 3);
    let details = read_json(&tmp.path().join("lenient/fit_details.json"));
    let rows = details["row_errors"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].as_str().unwrap().contains("line 5"), "{rows:?}");

    let o = run(tmp.path(), &["fit", "--config", cfg, "--out-dir", "strict", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
    assert!(!tmp.path().join("strict").exists());
}

#[test]
fn json_format_switches_table_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["hydrogen", "--out-dir", "out", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_json(&tmp.path().join("out/hydrogen.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let get = |q: &str| rows.iter().find(|r| r["quantity"] == q).unwrap()["value_au"].as_f64().unwrap();
    let a2 = 7.297_352_569_3e-3f64.powi(2);
    assert_eq!(get("H_c"), -a2 / 4.0);
    assert_eq!(get("H1"), -5.0 * a2 / 8.0);
    assert_eq!(get("dirac_ref"), -a2 / 8.0);
    assert!(!tmp.path().join("out/hydrogen.csv").exists());
}

#[test]
fn wigner_outputs_grid_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.json", r#"{"wigner":{"n":64,"dx":0.2}}"#);
    let o = run(tmp.path(), &["wigner", "--config", cfg.to_str().unwrap(), "--out-dir", "out", "--plot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let space = std::fs::read_to_string(out.join("wigner_space.csv")).unwrap();
    assert_eq!(space.lines().count(), 64 * 64 + 1);
    let s = read_json(&out.join("wigner_summary.json"));
    let product = s["uncertainty_product"].as_f64().unwrap();
    assert!((product - 0.5).abs() < 1e-6, "{product}");
    assert!(out.join("wigner_time.svg").exists());
}

#[test]
fn gas_sweep_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.json", r#"{"gas":{"temperatures":[0.5,1.0],"mus":[0.0,0.1],"eps_max":2.0}}"#);
    let o = run(tmp.path(), &["gas", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep = std::fs::read_to_string(tmp.path().join("out/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
    let s = read_json(&tmp.path().join("out/gas_summary.json"));
    let frac = s["velocity_cutoff_fraction"].as_f64().unwrap();
    assert!((frac - 0.75f64.sqrt()).abs() < 1e-12, "{frac}");
}

#[test]
fn gas_overflow_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.json", r#"{"gas":{"temperatures":[1e308]}}"#);
    let o = run(tmp.path(), &["gas", "--config", cfg.to_str().unwrap(), "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn boost_of_rest_state() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["boost", "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = extphase_cli::table::Series::from_csv(&std::fs::read(tmp.path().join("out/boost.csv")).unwrap()).unwrap();
    let p0 = s.column("p0").unwrap();
    let p1 = s.column("p1").unwrap();
    assert!((p0[1] + 1.25).abs() < 1e-12 && (p1[1] + 0.75).abs() < 1e-12, "{p0:?} {p1:?}");
    assert!(s.column("mass_shell_residual").unwrap().iter().all(|r| r.abs() < 1e-12));
    let report = read_json(&tmp.path().join("out/boost_report.json"));
    assert!(report["max_bracket_deviation"].as_f64().unwrap() < 1e-6);
}

#[test]
fn verify_subset_and_unknown_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["verify", "--only", "3,12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.ends_with("2/2 criteria passed\n"), "{table}");

    let o = run(tmp.path(), &["verify", "--only", "99"]);
    assert_eq!(o.status.code(), Some(3));
}
