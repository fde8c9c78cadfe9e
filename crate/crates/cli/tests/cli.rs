use std::path::Path;
use std::process::{Command, Output};

fn monoboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monoboot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_data(dir: &Path, values: &[f64]) -> String {
    let path = dir.join("sample.txt");
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn exp_like_data(dir: &Path) -> String {
    // Quantiles of Exp(1) at (i - 0.5) / 200.
    let values: Vec<f64> = (1..=200)
        .map(|i| -(1.0 - (i as f64 - 0.5) / 200.0).ln())
        .collect();
    write_data(dir, &values)
}

#[test]
fn estimate_on_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), &[1.0, 2.0, 4.0]);
    let o = monoboot(&["estimate", "--data", &data, "--t0", "1.0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.333333");
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let o = monoboot(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn usage_errors_exit_2_with_distinct_messages() {
    let dir = tempfile::tempdir().unwrap();
    let data = exp_like_data(dir.path());
    let unknown = monoboot(&["estimate", "--data", &data, "--t0", "1", "--bogus"]);
    let no_seed = monoboot(&["ci", "--data", &data, "--t0", "1", "--scheme", "edf"]);
    let missing = monoboot(&[
        "estimate",
        "--data",
        "/definitely/not/here.txt",
        "--t0",
        "1",
    ]);
    let messages: Vec<String> = [&unknown, &no_seed, &missing]
        .iter()
        .map(|o| {
            assert_eq!(o.status.code(), Some(2));
            String::from_utf8_lossy(&o.stderr)
                .lines()
                .next()
                .unwrap_or_default()
                .to_string()
        })
        .collect();
    assert!(messages[0].contains("--bogus"));
    assert!(messages[1].contains("required"));
    assert!(messages[2].contains("not/here.txt"));
    let bad_scheme = monoboot(&[
        "ci", "--data", &data, "--t0", "1", "--scheme", "x", "--seed", "1",
    ]);
    assert_eq!(bad_scheme.status.code(), Some(2));
}

#[test]
fn ci_prints_a_json_record_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let data = exp_like_data(dir.path());
    let out = dir.path().join("out");
    let args = [
        "ci",
        "--data",
        &data,
        "--t0",
        "1.0",
        "--scheme",
        "npmle",
        "--B",
        "200",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ];
    let o = monoboot(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    for key in ["estimate", "lo", "hi", "scheme", "B", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["scheme"], "npmle");
    assert_eq!(v["B"], 200);
    let (lo, hi, est) = (
        v["lo"].as_f64().unwrap(),
        v["hi"].as_f64().unwrap(),
        v["estimate"].as_f64().unwrap(),
    );
    assert!(lo <= est && est <= hi);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["level"], 0.95);
    assert_eq!(meta["config"]["scheme_args"]["kernel"], "gaussian");
    assert_eq!(stdout(&monoboot(&args)), stdout(&o));
}

#[test]
fn chernoff_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = monoboot(&[
            "--threads",
            threads,
            "chernoff",
            "--draws",
            "2000",
            "--seed",
            "7",
            "--c",
            "3",
            "--delta",
            "0.01",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (
            std::fs::read(out.join("chernoff.csv")).unwrap(),
            std::fs::read(out.join("summary.csv")).unwrap(),
        )
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
    assert!(String::from_utf8_lossy(&a.0).starts_with("draw\n"));
}

#[test]
fn coverage_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("study.toml");
    std::fs::write(
        &config,
        "model = \"exp1\"\nt0 = 1.0\nscheme = \"edf\"\nsample_sizes = [50]\nn_intervals = 10\nn_boot = 100\nmaster_seed = 4\n",
    )
    .unwrap();
    let out = dir.path().join("cov");
    let o = monoboot(&[
        "coverage",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("coverage.csv")).unwrap();
    assert!(csv.starts_with("scheme,n,coverage,mc_stderr,mean_length\nedf,50,"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["level"], 0.95);
    assert_eq!(meta["config"]["master_seed"], 4);

    std::fs::write(&config, "model = \"exp1\"\n").unwrap();
    let bad = monoboot(&[
        "coverage",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn limit_histogram_and_tracking_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = monoboot(&[
        "limit", "--f", "1", "--fprime", "-2", "--draws", "200", "--c", "3", "--delta", "0.01",
        "--seed", "1", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let limit = std::fs::read_to_string(dir.path().join("limit.csv")).unwrap();
    assert!(limit.starts_with("slope_z,slope_z20\n"));
    assert_eq!(limit.lines().count(), 201);

    let o = monoboot(&[
        "histogram",
        "--n",
        "100",
        "--draws",
        "500",
        "--bins",
        "20",
        "--seed",
        "2",
        "--out",
        out,
    ]);
    assert!(o.status.success());
    let hist = std::fs::read_to_string(dir.path().join("hist.csv")).unwrap();
    assert!(hist.starts_with("bin_left,bin_right,count,density\n"));
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 500);

    let o = monoboot(&[
        "track-quantiles",
        "--sizes",
        "50,100",
        "--B",
        "100",
        "--seed",
        "3",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let q = std::fs::read_to_string(dir.path().join("quantiles.csv")).unwrap();
    assert!(q.starts_with("sequence,scheme,n,quantile\n"));
    assert_eq!(q.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn check_model_reports_conditions() {
    let o = monoboot(&["check-model", "--model", "half_normal", "--t0", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["conditions"]["alpha1_finite"], false);
    assert!((v["limit_scale"].as_f64().unwrap() - 0.97847).abs() < 1e-5);
    assert_eq!(
        monoboot(&["check-model", "--model", "gamma"]).status.code(),
        Some(2)
    );
}
