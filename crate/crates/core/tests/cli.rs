mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beamtrack::cli::RunManifest;
use tempfile::TempDir;

use common::configs_dir;

fn beamtrack(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamtrack"))
        .args(args)
        .current_dir(dir)
        .env_remove(beamtrack::cli::CONFIG_DIR_ENV)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs_dir().join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn assert_full_precision(field: &str) {
    let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
    let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(digits, 17, "{field}");
}

#[test]
fn design_reports_constraints_and_ranges() {
    let dir = TempDir::new().unwrap();
    let o = beamtrack(dir.path(), &["design", "--config", &config("design.toml")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("0 < w_z < 6.55"), "{out}");
    assert!(out.contains("3.93 < w_z < 4.72"), "{out}");
    assert!(out.contains("3.93e-2 < phi < 4.72e-2"), "{out}");
    assert!(dir.path().join("design-manifest.json").exists());
}

#[test]
fn design_csv_and_json_outputs() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("d.csv");
    let o = beamtrack(dir.path(), &["design", "--config", &config("design.toml"), "--out", csv_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&csv_path);
    assert_eq!(header, ["quantity", "value"]);
    let get = |k: &str| rows.iter().find(|r| r[0] == k).unwrap()[1].parse::<f64>().unwrap();
    assert!((get("average_power_upper") - 6.55).abs() < 0.01);
    assert!((get("width_lower") - 3.93).abs() < 0.01);
    assert!((get("divergence_upper") - 4.72e-2).abs() < 1e-4);
    assert_full_precision(&rows[0][1]);

    let json_path = dir.path().join("d.json");
    let o = beamtrack(
        dir.path(),
        &["design", "--config", &config("design.toml"), "--out", json_path.to_str().unwrap(), "--format", "json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["feasible"], true);
    assert!((v["rule"]["outage"]["hi"].as_f64().unwrap() - 4.72).abs() < 0.01);
}

#[test]
fn infeasible_design_exits_three_with_minimum() {
    let dir = TempDir::new().unwrap();
    let o = beamtrack(dir.path(), &["design", "--config", &config("infeasible.toml")]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("infeasible"), "{out}");
    assert!(out.contains("minimum attainable expected outage 9.6136e-2"), "{out}");
}

#[test]
fn missing_field_is_a_usage_error_naming_it() {
    let dir = TempDir::new().unwrap();
    let p = write_config(&dir, "c.toml", "z = 100\naA = 80\nsigma_sum_sq = 2\neta = 1\ngamma_th = 1\n");
    let o = beamtrack(dir.path(), &["design", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing field `xi`"), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_line() {
    let dir = TempDir::new().unwrap();
    let p = write_config(&dir, "c.toml", "z = 100\naA = eighty\n");
    let o = beamtrack(dir.path(), &["design", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn config_dir_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_beamtrack"))
            .args(args)
            .current_dir(dir.path())
            .env(beamtrack::cli::CONFIG_DIR_ENV, configs_dir())
            .output()
            .unwrap()
    };
    let o = run(&["design", "--config", "design.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("3.93 < w_z < 4.72"));

    let o = Command::new(env!("CARGO_BIN_EXE_beamtrack"))
        .args(["design"])
        .current_dir(dir.path())
        .env_remove(beamtrack::cli::CONFIG_DIR_ENV)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_csv_columns_and_oracle_agreement() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.csv");
    let o = beamtrack(
        dir.path(),
        &["sweep", "--config", &config("outage_vs_aA.toml"), "--curve", "expected-outage", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["w_z", "value", "series", "method"]);
    let mut series: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    series.dedup();
    assert_eq!(series, ["aA=40", "aA=80", "aA=160"]);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][3], "closed_form");
        assert_eq!(pair[1][3], "numeric_oracle");
        assert_eq!(pair[0][0], pair[1][0]);
        let a: f64 = pair[0][1].parse().unwrap();
        let b: f64 = pair[1][1].parse().unwrap();
        assert!((a - b).abs() <= 1e-6, "{pair:?}");
        assert_full_precision(&pair[0][0]);
        assert_full_precision(&pair[0][1]);
    }
    let raw = fs::read_to_string(&out).unwrap();
    assert!(raw.ends_with("\r\n") && raw.lines().count() == rows.len() + 1);
}

#[test]
fn sweep_power_over_spreads_to_stdout() {
    let dir = TempDir::new().unwrap();
    let o = beamtrack(dir.path(), &["sweep", "--config", &config("outage_vs_spread.toml"), "--curve", "avg-power"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 150);
    assert!(rows.iter().all(|r| &r[3] == "closed_form"));
    assert_eq!(&rows[0][2], "s2=1");
}

#[test]
fn sweep_rejects_empty_grid() {
    let dir = TempDir::new().unwrap();
    let p = write_config(&dir, "c.toml", "aA = 80\nsigma_sum_sq = 2\ngamma_th = 1\n[sweep]\nw_z = []\n");
    let o = beamtrack(dir.path(), &["sweep", "--config", p.to_str().unwrap(), "--curve", "avg-power"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"));
}

#[test]
fn track_multilateration_statistics_and_trials_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t.csv");
    let o = beamtrack(
        dir.path(),
        &["track", "--config", &config("multilateration.toml"), "--target", "0,0", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["trial", "est_x", "est_y", "error"]);
    assert_eq!(rows.len(), 10_000);
    let mean = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).sum::<f64>() / rows.len() as f64;
    assert!((mean / 0.0103 - 1.0).abs() <= 0.2, "{mean}");
    assert!(stdout(&o).contains("mean radial error"));
}

#[test]
fn track_grid_mle_noiseless_hits_target() {
    let dir = TempDir::new().unwrap();
    let o = beamtrack(
        dir.path(),
        &["track", "--config", &config("grid_mle.toml"), "--algorithm", "mle-grid", "--target", "0.5,0.4", "--noiseless"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let est = out.split("estimate:").nth(1).unwrap().lines().next().unwrap();
    let xy: Vec<f64> = est.trim().trim_matches(|c| c == '(' || c == ')').split(", ").map(|t| t.parse().unwrap()).collect();
    assert!((xy[0] - 0.5).abs() < 1e-12 && (xy[1] - 0.4).abs() < 1e-12, "{out}");
}

#[test]
fn track_rejects_unknown_algorithm() {
    let dir = TempDir::new().unwrap();
    let o = beamtrack(dir.path(), &["track", "--config", &config("multilateration.toml"), "--algorithm", "kalman"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn error_bound_table_values() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e.csv");
    let o = beamtrack(dir.path(), &["error-bound", "--config", &config("multilateration.toml"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv(&out);
    let want = [0.0114, 0.0118, 0.0130, 0.0132, 0.0232, 0.0120];
    for (r, w) in rows.iter().zip(want) {
        let v: f64 = r[2].parse().unwrap();
        assert!((v - w).abs() <= 5e-4, "{r:?}");
    }
}

#[test]
fn error_bound_doubles_with_noise() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs_dir().join("multilateration.toml"))
        .unwrap()
        .replace("sigma_n = 0.01", "sigma_n = 0.02");
    let p = write_config(&dir, "c.toml", &text);
    let o = beamtrack(dir.path(), &["error-bound", "--config", p.to_str().unwrap(), "--point", "0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let v: f64 = out.split("(0, 0): ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((v - 0.0228).abs() < 5e-4, "{out}");
}

#[test]
fn collinear_beacons_fail_per_point() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e.csv");
    let o = beamtrack(dir.path(), &["error-bound", "--config", &config("collinear.toml"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows[0][3].contains("rank deficient"), "{rows:?}");
    assert!(rows[1][2].is_empty() || rows[1][3].is_empty());
    assert!(stdout(&o).contains("rank deficient"));
}

#[test]
fn simulate_writes_trajectory() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim.csv");
    let o = beamtrack(
        dir.path(),
        &["simulate", "--config", &config("design.toml"), "--steps", "2000", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["index", "target_x", "target_y", "center_x", "center_y", "power", "outage"]);
    assert_eq!(rows.len(), 2000);
    assert!(stdout(&o).contains("w_z = 4.3285"));
}

#[test]
fn seed_flag_controls_output() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = beamtrack(
            dir.path(),
            &["track", "--config", &config("multilateration.toml"), "--trials", "500", "--seed", seed, "--out", out.to_str().unwrap()],
        );
        assert_eq!(o.status.code(), Some(0));
        fs::read(out).unwrap()
    };
    assert_eq!(run("5", "a.csv"), run("5", "b.csv"));
    assert_ne!(run("5", "a.csv"), run("6", "c.csv"));
}

#[test]
fn manifests_replay_bitwise() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, Vec<String>); 4] = [
        ("track.csv", vec!["track".into(), "--config".into(), config("multilateration.toml"), "--trials".into(), "300".into(), "--target=-1,-1".into()]),
        ("sweep.csv", vec!["sweep".into(), "--config".into(), config("outage_vs_aA.toml"), "--curve".into(), "expected-outage".into()]),
        ("sim.json", vec!["simulate".into(), "--config".into(), config("design.toml"), "--steps".into(), "500".into(), "--format".into(), "json".into()]),
        ("bound.csv", vec!["error-bound".into(), "--config".into(), config("multilateration.toml")]),
    ];
    for (name, mut args) in cases {
        let first = dir.path().join(name);
        args.push("--out".into());
        args.push(first.display().to_string());
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = beamtrack(dir.path(), &argv);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));

        let manifest_path = dir.path().join(format!("{name}.manifest.json"));
        let manifest = RunManifest::load(&manifest_path).unwrap();
        assert_eq!(manifest.outputs, vec![first.clone()]);
        assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));

        let second = dir.path().join(format!("replay-{name}"));
        let o = beamtrack(
            dir.path(),
            &["rerun", manifest_path.to_str().unwrap(), "--out", second.to_str().unwrap()],
        );
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap(), "{name}");
    }
}
