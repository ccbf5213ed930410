//! End-to-end runs of the `spdgeom` binary.

use std::f64::consts::E;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use spdgeom_cli::dataset::DatasetFile;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdgeom")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_dataset(dir: &TempDir, name: &str, json: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn worked(dir: &TempDir) -> String {
    let json = format!(
        r#"{{"n": 2, "matrices": [[[1, 0], [0, 1]], [[{e2}, 0], [0, 1]], [[{e}, 0], [0, 1]]]}}"#,
        e2 = E * E,
        e = E
    );
    write_dataset(dir, "worked.json", &json)
}

#[test]
fn worked_distances() {
    let dir = TempDir::new().unwrap();
    let file = worked(&dir);
    let out = run(&["dist", &file, "0", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "2.00000000000\n");
    let out = run(&["--metric", "polar", "dist", &file, "0", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1.00000000000\n");
    let out = run(&["dist", &file, "1", "1"]);
    assert_eq!(stdout(&out), "0\n");
}

#[test]
fn dist_index_out_of_range() {
    let dir = TempDir::new().unwrap();
    let out = run(&["dist", &worked(&dir), "0", "7"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn interp_table() {
    let dir = TempDir::new().unwrap();
    let file = worked(&dir);
    let out = run(&["interp", &file, "0", "1", "--t", "0,0.5,1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,m_0_0,m_0_1,m_1_0,m_1_1,det,dist");
    let mid: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((mid[5] - E).abs() < 1e-12);
    assert!((mid[6] - 1.0).abs() < 1e-12);
}

#[test]
fn log_euclidean_and_affine_paths_differ_off_commuting_pairs() {
    let dir = TempDir::new().unwrap();
    let file = write_dataset(&dir, "pair.json", r#"{"n": 2, "matrices": [[[2, 0.9], [0.9, 1]], [[1, -0.5], [-0.5, 3]]]}"#);
    let affine = stdout(&run(&["interp", &file, "0", "1", "--t", "0.5"]));
    let le = stdout(&run(&["--metric", "logeuclidean", "interp", &file, "0", "1", "--t", "0.5"]));
    let row = |s: &str| -> Vec<f64> { s.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect() };
    let (a, l) = (row(&affine), row(&le));
    assert!((a[1] - l[1]).abs() > 1e-3);
    // both midpoints have the geometric-mean determinant
    let det = (2.0 - 0.81_f64).sqrt() * (3.0 - 0.25_f64).sqrt();
    assert!((a[5] - det).abs() < 1e-10 && (l[5] - det).abs() < 1e-10);
}

#[test]
fn mean_output_round_trips_as_dataset() {
    let dir = TempDir::new().unwrap();
    let file = write_dataset(
        &dir,
        "three.json",
        r#"{"n": 2, "matrices": [[[2, 0.5], [0.5, 1]], [[1, 0], [0, 3]], [[1.5, -0.2], [-0.2, 0.7]]]}"#,
    );
    let out = run(&["mean", &file]);
    assert!(out.status.success());
    let text = stdout(&out);
    let parsed = DatasetFile::parse(&text).unwrap();
    let mean = &parsed.points().unwrap()[0];
    let value: Value = serde_json::from_str(&text).unwrap();
    assert!(value["grad_norm"].as_f64().unwrap() < 1e-10);

    let again_file = write_dataset(&dir, "mean.json", &text);
    let again = DatasetFile::read(Path::new(&again_file)).unwrap().points().unwrap();
    assert!((again[0].matrix() - mean.matrix()).amax() < 1e-12);

    // the mean of the data together with copies of its mean is unchanged
    let mut with_mean: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    with_mean["matrices"].as_array_mut().unwrap().push(value["matrices"][0].clone());
    let extended = write_dataset(&dir, "extended.json", &with_mean.to_string());
    let out: Value = serde_json::from_str(&stdout(&run(&["mean", &extended]))).unwrap();
    let m2 = DatasetFile::parse(&out.to_string()).unwrap().points().unwrap();
    assert!((m2[0].matrix() - mean.matrix()).amax() < 1e-9);
}

#[test]
fn pca_on_geodesic_data_has_one_dominant_variance() {
    let dir = TempDir::new().unwrap();
    let pair = write_dataset(&dir, "pair.json", r#"{"n": 2, "matrices": [[[2, 0.4], [0.4, 1]], [[1, -0.3], [-0.3, 3]]]}"#);
    let csv = stdout(&run(&["interp", &pair, "0", "1", "--t", "-0.5,0,0.5,1,1.5"]));
    let matrices: Vec<Vec<Vec<f64>>> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            vec![vec![v[1], v[2]], vec![v[3], v[4]]]
        })
        .collect();
    let data = serde_json::json!({"n": 2, "matrices": matrices});
    let file = write_dataset(&dir, "line.json", &data.to_string());
    let out = run(&["pca", &file]);
    assert!(out.status.success());
    let value: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let variances: Vec<f64> = value["variances"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(variances[0] > 1e-2);
    assert!(variances[1..].iter().all(|&v| v < 1e-10));
    let top = run(&["pca", &file, "--k", "1"]);
    let value: Value = serde_json::from_str(&stdout(&top)).unwrap();
    assert_eq!(value["variances"].as_array().unwrap().len(), 1);
}

#[test]
fn check_is_deterministic() {
    let args = ["check", "--seed", "7", "--trials", "20", "--only", "theorem5"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.lines().all(|l| l.starts_with("theorem5/") || l.starts_with("summary:")));
    assert!(text.contains("PASS"));
}

#[test]
fn check_single_suite() {
    let out = run(&["check", "--only", "theorem3", "--trials", "50"]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("theorem3/")).count(), 3);
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["check", "--only", "theorem9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
    for beta in ["-1", "-0.6667"] {
        let out = run(&["--beta", beta, "check", "--only", "theorem5"]);
        assert_eq!(out.status.code(), Some(1), "beta {beta}");
    }
    assert_eq!(run(&["--metric", "power:0", "check"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["dist", "/nonexistent.json", "0", "1"]).status.code(), Some(1));
}

#[test]
fn non_convergence_exits_two() {
    let dir = TempDir::new().unwrap();
    let file = write_dataset(
        &dir,
        "three.json",
        r#"{"n": 2, "matrices": [[[2, 0.5], [0.5, 1]], [[1, 0], [0, 3]], [[1.5, -0.2], [-0.2, 0.7]]]}"#,
    );
    let out = run(&["--max-iter", "1", "--tol", "1e-300", "mean", &file]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("check"));
}
