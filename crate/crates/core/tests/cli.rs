use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_martingale-safety");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("MARTINGALE_SAFETY_OUT")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("spawn binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bound_json(args: &[&str]) -> serde_json::Value {
    let mut full = vec!["bound"];
    full.extend_from_slice(args);
    let o = run(&full);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).expect("bound prints JSON")
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

fn column<'a>(header: &[String], rows: &'a [Vec<String>], name: &str) -> Vec<&'a str> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].as_str()).collect()
}

const SMALL_CONFIG: &str = r#"{
  "seed": 7,
  "scenarios": [
    {"id": "grid", "kind": "bound_grid",
     "params": {"lambda": {"start": 0, "stop": 10, "count": 6}, "sigma": {"start": 0.1, "stop": 1, "count": 4}}},
    {"id": "issf", "kind": "issf_compare", "trials": 150,
     "params": {"horizons": [1, 60], "epsilon": {"start": 0, "stop": 20, "count": 3}}},
    {"id": "walk", "kind": "hlip_case", "trials": 40,
     "params": {"d_max": [0.0, 0.06], "alpha": [0.9], "retain_trajectories": 2}},
    {"id": "props", "kind": "property_suite",
     "params": {"martingale_trials": 200, "ville_trials": 200, "wilson_repetitions": 40,
                "moment_draws": 5000, "random_tuples": 200}}
  ]
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn bound_examples() {
    let v = bound_json(&["--mode", "dtcbf", "--alpha", "0.99", "--K", "100", "--h0", "5", "--delta", "1", "--sigma", "0.2"]);
    assert!((v["raw"].as_f64().unwrap() - 0.6933).abs() < 5e-5, "{v}");
    assert_eq!(v["vacuous"], false);
    assert!(v.get("ville").is_none());

    let v = bound_json(&["--mode", "dtcbf", "--alpha", "1", "--K", "10", "--h0", "0", "--delta", "1", "--sigma", "0.1"]);
    assert_eq!(v["raw"], 1.0);

    let v = bound_json(&["--mode", "cmart", "--c", "0", "--B", "10", "--h0", "5", "--K", "1", "--delta", "1", "--sigma", "0.1"]);
    assert_eq!(v["ville"]["raw"], 0.5);
    assert!(v["clamped"].as_f64().unwrap() <= 1.0);
}

#[test]
fn invalid_flags_exit_2_with_one_line() {
    for args in [
        vec!["bound", "--mode", "dtcbf", "--K", "10"],
        vec!["bound", "--mode", "dtcbf", "--alpha", "0,99", "--K", "1", "--h0", "1", "--delta", "1", "--sigma", "1"],
        vec!["bound", "--mode", "sideways", "--K", "1", "--h0", "1", "--delta", "1", "--sigma", "1"],
        vec!["bound", "--mode", "dtcbf", "--alpha", "1.5", "--K", "1", "--h0", "1", "--delta", "1", "--sigma", "1"],
        vec!["bound", "--mode", "cmart", "--K", "1", "--h0", "1", "--delta", "1", "--sigma", "1"],
        vec!["hlip", "--bogus"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn help_lists_every_flag() {
    let o = run(&["bound", "--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--mode", "--alpha", "--c", "--K", "--h0", "--delta", "--sigma", "--B"] {
        assert!(text.contains(flag), "bound help lacks {flag}");
    }
    let o = run(&["run", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--trials", "--seed", "--out", "--workers"] {
        assert!(text.contains(flag), "run help lacks {flag}");
    }
    let o = run(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for sub in ["bound", "run", "compare", "issf", "hlip", "properties"] {
        assert!(text.contains(sub), "top-level help lacks {sub}");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let cfg = write_config(dir.path(), r#"{"scenarios": [], "workerz": 2}"#);
    let o = run(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("workerz"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists(), "nothing is written for a bad config");

    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let o = run(&["run", &cfg, "--trials", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn run_is_byte_identical_across_reruns_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let mut outs = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = dir.path().join(name);
        let o = run(&["run", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(o.stdout.is_empty(), "run keeps stdout clean");
        outs.push(out);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outs[0].join("manifest.json")).unwrap()).unwrap();
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert_eq!(files.len(), 10);
    for f in files.iter().copied().chain(["manifest.json"]) {
        let a = fs::read(outs[0].join(f)).unwrap();
        assert_eq!(a, fs::read(outs[1].join(f)).unwrap(), "{f} differs between reruns");
        assert_eq!(a, fs::read(outs[2].join(f)).unwrap(), "{f} depends on worker count");
    }
}

#[test]
fn seed_flag_changes_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["run", &cfg, "--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["run", &cfg, "--out", b.to_str().unwrap(), "--seed", "8"])), 0);
    assert_ne!(fs::read(a.join("issf.csv")).unwrap(), fs::read(b.join("issf.csv")).unwrap());
    assert_eq!(fs::read(a.join("grid.csv")).unwrap(), fs::read(b.join("grid.csv")).unwrap());
}

#[test]
fn trials_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("o");
    let o = run(&["run", &cfg, "--out", out.to_str().unwrap(), "--trials", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["trials_override"], 10);
    for s in m["scenarios"].as_array().unwrap() {
        if s["kind"] != "bound_grid" {
            assert_eq!(s["trials"], 10, "{s}");
        }
    }
    let (h, rows) = read_csv(&out.join("issf.csv"));
    assert!(column(&h, &rows, "n_trials").iter().all(|n| *n == "10"));
}

#[test]
fn hlip_without_disturbance_never_exits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["hlip", "--dmax", "0", "--trials", "50", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out.join("hlip_case.csv"));
    assert_eq!(rows.len(), 2);
    assert!(column(&h, &rows, "n_exits").iter().all(|n| *n == "0"));
    assert!(out.join("hlip_case_trajectories.csv").exists());
}

#[test]
fn issf_single_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["issf", "--K", "1", "--trials", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out.join("issf_compare.csv"));
    assert_eq!(rows.len(), 20 * 3);
    assert!(column(&h, &rows, "horizon").iter().all(|k| *k == "1"));
}

#[test]
fn compare_writes_the_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["compare", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = read_csv(&out.join("bound_grid.csv"));
    assert_eq!(h, ["lambda", "sigma", "ville", "freedman", "cond1", "cond2", "gap"]);
    assert_eq!(rows.len(), 101 * 100);
    assert!(out.join("bound_grid.json").exists());
}

#[test]
fn property_failure_exits_3() {
    // a single Wilson interval per p misses the truth for this seed
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"seed": 15, "scenarios": [{"id": "p", "kind": "property_suite",
            "params": {"martingale_trials": 10, "ville_trials": 10, "wilson_repetitions": 1,
                       "moment_draws": 1000, "random_tuples": 10}}]}"#,
    );
    let out = dir.path().join("o");
    let o = run(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("wilson_coverage"));
    let (h, rows) = read_csv(&out.join("p.csv"));
    let failed: Vec<_> = column(&h, &rows, "passed").into_iter().filter(|p| *p == "false").collect();
    assert_eq!(failed.len(), 1);
}

#[test]
fn io_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = run(&["compare", "--lambda-count", "2", "--sigma-count", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let o = Command::new(BIN)
        .args(["compare", "--lambda-count", "3", "--sigma-count", "2"])
        .env("MARTINGALE_SAFETY_OUT", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(target.join("bound_grid.csv").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn in_process_entry_point() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let rc = martingale_safety::cli::run(
        ["martingale-safety", "bound", "--mode", "cmart", "--c", "0.01", "--K", "100", "--h0", "5", "--delta", "1", "--sigma", "0.2"],
        &mut out,
        &mut err,
    );
    assert_eq!(rc, martingale_safety::cli::EXIT_OK);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert!((v["raw"].as_f64().unwrap() - 0.213_274_023_566_969_7).abs() < 1e-12);
    assert!(err.is_empty());
}
