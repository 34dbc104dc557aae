use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn rfddes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfddes")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_three_by_three_has_33_entries() {
    let o = rfddes(&["gen", "3", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let size = text.lines().find(|l| !l.starts_with('%')).unwrap();
    assert_eq!(size.split_whitespace().collect::<Vec<_>>(), ["9", "9", "33"]);
}

#[test]
fn gen_single_point() {
    let o = rfddes(&["gen", "1", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l.trim() == "1 1 1"));
}

#[test]
fn generated_file_solves_like_the_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("a.mtx");
    assert!(rfddes(&["gen", "12", "8", "--out", path(&file)]).status.success());
    let from_file = rfddes(&["solve", "--a", path(&file), "--lowest", "6", "--omit-timings"]);
    let from_mesh = rfddes(&["solve", "--mesh", "12x8", "--lowest", "6", "--omit-timings"]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let f: Value = serde_json::from_slice(&from_file.stdout).unwrap();
    let m: Value = serde_json::from_slice(&from_mesh.stdout).unwrap();
    let vals = |v: &Value| v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect::<Vec<_>>();
    let (a, b) = (vals(&f), vals(&m));
    assert_eq!(a.len(), 6);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-10 * y.abs());
    }
    assert!(f["max_rel_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn missing_input_is_an_ingestion_failure() {
    let o = rfddes(&["solve", "--a", "/definitely/not/here.mtx", "--alpha", "0", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ingestion"));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(rfddes(&["solve", "--mesh", "4x4"]).status.code(), Some(2));
    assert_eq!(rfddes(&["gen", "3"]).status.code(), Some(2));
}

#[test]
fn mesh_solve_converges_quickly() {
    let o = rfddes(&["solve", "--mesh", "30x20", "--lowest", "10", "--nc", "4", "--omit-timings"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["converged"].as_bool().unwrap());
    assert!(r["mu"].as_u64().unwrap() < 100);
    assert_eq!(r["values"].as_array().unwrap().len(), 10);
    assert!(r.get("phase_seconds").is_none());
}

#[test]
fn krylov_solve_matches_reference() {
    let o = rfddes(&["solve", "--method", "rfkrylov", "--mesh", "15x10", "--lowest", "5"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["method"], "rfkrylov");
    assert!(r["max_rel_error"].as_f64().unwrap() < 1e-10);
    assert!(r["phase_seconds"].is_object());
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["solve", "--mesh", "20x15", "--lowest", "8", "--omit-timings", "--seed", "3"];
    assert_eq!(rfddes(&args).stdout, rfddes(&args).stdout);
}

#[test]
fn empty_grid_is_header_only() {
    let o = rfddes(&["compare", "--mesh", "5x5", "--lowest", "3", "--grid-nevb="]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "nev_b,psi,max_rel_error,found,mu,dim_z\n");
}

#[test]
fn compare_grid_improves_with_depth() {
    let o = rfddes(&["compare", "--mesh", "30x20", "--lowest", "20", "--grid-nevb", "40", "--grid-psi", "1,3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let errs: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(errs.len(), 2);
    assert!(errs[1] < errs[0]);
}

#[test]
fn large_file_without_reference_exits_nine() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("big.mtx");
    assert!(rfddes(&["gen", "80", "70", "--out", path(&file)]).status.success());
    let o = rfddes(&["compare", "--a", path(&file), "--alpha", "0", "--beta", "0.01"]);
    assert_eq!(o.status.code(), Some(9));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mesh"));
}

#[test]
fn partition_stats_reports_sizes() {
    let o = rfddes(&["partition-stats", "--mesh", "20x10", "--p", "4"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let d: u64 = r["d"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum();
    assert_eq!(d + r["s"].as_u64().unwrap(), 200);
    assert_eq!(r["p"], 4);
}

#[test]
fn filter_plot_peaks_at_the_center() {
    let o = rfddes(&["filter-plot", "--alpha", "0", "--beta", "2", "--count", "5", "--lo", "-1", "--hi", "3"]);
    assert!(o.status.success());
    let rows: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let (x, y) = l.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2].0, 1.0);
    assert!(rows.iter().all(|r| r.1 <= rows[2].1));
}

#[test]
fn verify_suites_pass_on_random_pencils() {
    for suite in ["identity", "rank", "bounds"] {
        let o = rfddes(&["verify", "--suite", suite, "--seed", "7"]);
        assert!(o.status.success(), "{suite}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn thread_count_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_rfddes"))
        .args(["solve", "--mesh", "10x10", "--lowest", "4", "--omit-timings"])
        .env("RFDDES_THREADS", "1")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["environment"]["threads"], 1);
}
