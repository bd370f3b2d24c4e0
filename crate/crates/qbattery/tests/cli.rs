use std::path::Path;
use std::process::{Command, Output};

fn qbattery(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbattery"))
        .args(args)
        .env_remove("LIOUVILLE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn key_value(text: &str) -> std::collections::HashMap<String, String> {
    text.lines()
        .skip(1)
        .filter_map(|l| l.split_once(','))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn spectrum_lists_nine_eigenvalues_with_one_zero_mode() {
    let o = qbattery(&["spectrum"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let full: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| l.starts_with("full,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(full.len(), 9);
    assert_eq!(
        full.iter().filter(|(re, im)| re.hypot(*im) < 1e-9).count(),
        1
    );
    assert_eq!(text.lines().filter(|l| l.starts_with("l5,")).count(), 5);
}

#[test]
fn undriven_cold_battery_stores_nothing() {
    let o = qbattery(&["metrics", "--nth", "0", "--omega", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let kv = key_value(&stdout(&o));
    assert_eq!(kv["e_s_ev"], "0");
    assert_eq!(kv["p_s_ev_per_us"], "0");
}

#[test]
fn ep_near_the_expected_thermal_occupation() {
    let o = qbattery(&["ep"]);
    assert!(o.status.success());
    let n: f64 = key_value(&stdout(&o))["nth_ep"].parse().unwrap();
    assert!((n - 4.8).abs() < 0.5, "{n}");
}

#[test]
fn bad_arguments_exit_with_2_and_name_the_flag() {
    let o = qbattery(&["spectrum", "--gamma20=-3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--gamma20"));
    assert_eq!(
        qbattery(&["sweep", "--axis1", "bogus:0:1:3", "--axis2", "omega:1:2:2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qbattery(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_1_after_writing_output() {
    // the dark cold battery relaxes at γ10/2, far beyond a 1 μs horizon
    let o = qbattery(&[
        "metrics",
        "--omega",
        "0",
        "--nth",
        "0",
        "--initial",
        "excited",
        "--tmax",
        "1e-3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(key_value(&stdout(&o))["status"], "not_converged");
}

#[test]
fn ep_search_without_a_crossing_is_a_numerical_failure() {
    let o = qbattery(&["ep", "--omega", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = qbattery(&[
            "sweep",
            "--axis1",
            "n_th:1:12:4",
            "--axis2",
            "omega_over_2pi:10:30:3",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (
            std::fs::read(&out).unwrap(),
            std::fs::read(dir.path().join(format!("{name}.ep.csv"))).unwrap(),
        )
    };
    assert_eq!(run("1", "a.csv"), run("3", "b.csv"));
    assert!(dir.path().join("a.csv.meta.json").exists());
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "nth = 8.0\nomega = 30.0\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let row = |args: &[&str]| {
        let mut all = vec![
            "sweep",
            "--axis1",
            "epsilon:1e-6:1e-6:1",
            "--axis2",
            "delta:0:0:1",
            "--metrics",
            "delta",
        ];
        all.extend_from_slice(args);
        let o = qbattery(&all);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let fields: Vec<String> = text
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(str::to_string)
            .collect();
        (fields[0].clone(), fields[1].clone())
    };
    assert_eq!(row(&[]), ("4.8".to_string(), "20".to_string()));
    assert_eq!(row(&["--config", cfg]), ("8".to_string(), "30".to_string()));
    assert_eq!(
        row(&["--config", cfg, "--nth", "2"]),
        ("2".to_string(), "30".to_string())
    );
}

#[test]
fn unknown_config_keys_are_argument_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "temperature = 3\n").unwrap();
    let o = qbattery(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn propagate_writes_the_requested_number_of_points() {
    let o = qbattery(&["propagate", "--points", "50", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[0]["rho00"], 1.0);
}

#[test]
fn preset_writes_into_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig6");
    let o = qbattery(&[
        "preset",
        "fig6",
        "--grid",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["fig6.csv", "fig6_ep.csv", "fig6.meta.json"] {
        assert!(Path::new(&out).join(f).exists(), "{f}");
    }
}
