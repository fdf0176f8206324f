use std::path::Path;
use std::process::Command;

use clap::Parser;

use dcnflow::cli::{run_cli, Cli};
use dcnflow::io::{self, METRICS_CSV_HEADER};
use dcnflow_core::benchmarks::{estimate, Kpi};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dcnflow"))
}

fn run(args: &[&str]) -> anyhow::Result<String> {
    let mut argv = vec!["dcnflow"];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(argv)?;
    let mut out = Vec::new();
    run_cli(cli, &mut out)?;
    Ok(String::from_utf8(out)?)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_trace_with_requested_load() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let stdout = run(&["generate", "--preset", "university", "--load", "0.1", "--seed", "42", "--out", s(&out)]).unwrap();

    let printed: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let trace = io::read_trace_json(&out).unwrap();
    assert_eq!(printed["n_flows"].as_u64().unwrap() as usize, trace.flows.len());
    assert!((trace.report.load_frac - 0.1).abs() / 0.1 < 5e-3);

    // recompute from the flows themselves rather than trusting the header
    let topo = dcnflow_core::network::Topology::reference();
    let (_, _, rho) = dcnflow_core::generator::trace_load(&trace.flows, &topo).unwrap();
    assert!((rho - 0.1).abs() / 0.1 < 5e-3, "{rho}");
    assert_eq!(trace.provenance.config.seed, 42);
}

#[test]
fn generate_flag_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");

    let missing_out = bin().args(["generate", "--preset", "university"]).output().unwrap();
    assert!(!missing_out.status.success());
    assert!(String::from_utf8_lossy(&missing_out.stderr).contains("--out"));

    let zero = bin().args(["generate", "--preset", "university", "--load", "0", "--out", s(&out)]).output().unwrap();
    assert!(!zero.status.success());
    assert!(String::from_utf8_lossy(&zero.stderr).contains("target_load"));
    assert!(!out.exists());

    let unknown = run(&["generate", "--preset", "nope", "--out", s(&out)]).unwrap_err();
    assert!(unknown.to_string().contains("nope"));
}

#[test]
fn generate_from_spec_file_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dcnflow_core::network::Topology::reference();
    let p = dcnflow_core::benchmarks::preset("skewed_nodes_sensitivity_uniform", &topo).unwrap();
    let spec = dir.path().join("p.json");
    std::fs::write(&spec, serde_json::to_string_pretty(&p).unwrap()).unwrap();

    let common = ["--load", "0.3", "--jsd-threshold", "0.2", "--min-duration", "0", "--seed", "5"];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let mut args = vec!["generate", "--preset", "skewed_nodes_sensitivity_uniform", "--out", s(&a)];
    args.extend(common);
    run(&args).unwrap();
    let mut args = vec!["generate", "--spec-file", s(&spec), "--out", s(&b)];
    args.extend(common);
    run(&args).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

fn small_trace(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("t.csv");
    run(&[
        "generate",
        "--preset",
        "skewed_nodes_sensitivity_uniform",
        "--load",
        "0.5",
        "--jsd-threshold",
        "0.2",
        "--min-duration",
        "0",
        "--out",
        s(&out),
    ])
    .unwrap();
    out
}

#[test]
fn simulate_appends_deterministic_rows() {
    let dir = tempfile::tempdir().unwrap();
    let trace = small_trace(dir.path());
    let m = dir.path().join("m.csv");
    let args = ["simulate", "--trace", s(&trace), "--scheduler", "srpt", "--seed", "9", "--load", "0.5", "--out", s(&m)];
    run(&args).unwrap();
    run(&args).unwrap();

    let text = std::fs::read_to_string(&m).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], METRICS_CSV_HEADER.join(","));
    assert_eq!(lines[1].split(',').count(), 10);
    assert_eq!(lines[1], lines[2]);
    assert!(lines[1].starts_with("0.5,srpt,0,"));
}

#[test]
fn simulate_rejects_unknown_scheduler() {
    let dir = tempfile::tempdir().unwrap();
    let trace = small_trace(dir.path());
    let m = dir.path().join("m.csv");
    let out = bin().args(["simulate", "--trace", s(&trace), "--scheduler", "bogus", "--out", s(&m)]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["srpt", "fair_share", "first_fit", "random"] {
        assert!(err.contains(name), "{err}");
    }
    assert!(!m.exists());

    let missing = run(&["simulate", "--trace", s(&dir.path().join("none.json")), "--scheduler", "srpt", "--out", s(&m)]);
    assert!(missing.is_err());
}

#[test]
fn benchmark_counts_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    run(&[
        "benchmark",
        "--presets",
        "skewed_nodes_sensitivity_uniform",
        "--loads",
        "0.5",
        "--repeats",
        "1",
        "--schedulers",
        "srpt,ff",
        "--jsd-threshold",
        "0.2",
        "--min-duration",
        "0",
        "--out-dir",
        s(&out),
    ])
    .unwrap();
    let cells = csv::Reader::from_path(out.join(io::CELLS_FILE)).unwrap().records().count();
    assert_eq!(cells, 2);
    let winners: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join(io::WINNERS_FILE)).unwrap()).unwrap();
    assert_eq!(winners["winners"].as_array().unwrap().len(), 6);
}

#[test]
fn benchmark_ci_columns_match_raw_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let args = [
        "benchmark",
        "--presets",
        "skewed_nodes_sensitivity_uniform",
        "--loads",
        "0.3",
        "--repeats",
        "5",
        "--schedulers",
        "fs",
        "--jsd-threshold",
        "0.2",
        "--min-duration",
        "0",
        "--out-dir",
        s(&out),
    ];
    run(&args).unwrap();

    let mut runs = csv::Reader::from_path(out.join(io::RUNS_FILE)).unwrap();
    let h = runs.headers().unwrap().clone();
    let col = h.iter().position(|c| c == "mean_fct").unwrap();
    let raw: Vec<f64> = runs.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(raw.len(), 5);

    // sample standard deviation, normal 95% interval
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let ci = 1.96 * sd / n.sqrt();

    let mut cells = csv::Reader::from_path(out.join(io::CELLS_FILE)).unwrap();
    let h = cells.headers().unwrap().clone();
    let row = cells.records().next().unwrap().unwrap();
    let get = |name: &str| -> f64 { row[h.iter().position(|c| c == name).unwrap()].parse().unwrap() };
    assert!((get("mean_fct_mean") - mean).abs() <= 1e-9 * mean);
    assert!((get("mean_fct_ci95") - ci).abs() <= 1e-9 * ci.max(1.0));
    assert!(get("mean_fct_ci95") > 0.0);
    assert_eq!(estimate(&raw).mean, get("mean_fct_mean"));
    for k in Kpi::ALL {
        assert!(h.iter().any(|c| c == format!("{}_ci95", k.name())));
    }

    // identical invocation, identical files
    let first: Vec<Vec<u8>> = [io::RUNS_FILE, io::CELLS_FILE, io::WINNERS_FILE]
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect();
    run(&args).unwrap();
    for (f, bytes) in [io::RUNS_FILE, io::CELLS_FILE, io::WINNERS_FILE].iter().zip(first) {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn benchmark_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    assert!(bin().args(["benchmark", "--out-dir", s(&out)]).output().unwrap().status.code() == Some(2));
    assert!(run(&["benchmark", "--presets", "", "--out-dir", s(&out)]).is_err());
    assert!(run(&["benchmark", "--presets", "university", "--schedulers", "bogus", "--out-dir", s(&out)]).is_err());
    assert!(run(&["benchmark", "--presets", "university", "--repeats", "0", "--out-dir", s(&out)]).is_err());
    assert!(!out.exists());
}

#[test]
fn version_flag() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}
