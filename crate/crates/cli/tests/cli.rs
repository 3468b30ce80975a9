use std::fs::File;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn divcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divcorr"))
        .args(args)
        .env_remove("DIVCORR_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Non-comment lines, header first.
fn rows(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn delta_at_one_hundred() {
    let o = divcorr(&["delta", "--x", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&o);
    assert_eq!(r[0], "x,D,delta");
    let fields: Vec<&str> = r[1].split(',').collect();
    assert_eq!(fields[1], "482");
    let d: f64 = fields[2].parse().unwrap();
    assert!((d - 6.039_848_420_884_291).abs() < 1e-10);
    assert!(stdout(&o).starts_with("# divcorr 0.1.0 schema=1 command=delta precision_bits=256"));
}

#[test]
fn delta_against_voronoi() {
    let o = divcorr(&["delta", "--x", "100.5", "--voronoi-n", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&o);
    assert_eq!(r[0], "x,D,delta,N,Q_N,abs_gap");
    let gap: f64 = r[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!(gap < 0.5);
}

#[test]
fn domain_errors_exit_two() {
    let o = divcorr(&["delta", "--x", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain error"));
    let o = divcorr(&["cf", "--theta", "rat:22/7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rational"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        divcorr(&["verify", "--suite", "bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(divcorr(&["cf", "--theta", "surd:4"]).status.code(), Some(2));
    assert_eq!(
        divcorr(&["scan", "--theta", "surd:2", "--psi", "exp:0.5", "--bound", "9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(divcorr(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sqrt_two_convergents() {
    let o = divcorr(&["cf", "--theta", "surd:2", "--terms", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# theta surd:2 = [1;2,2,2,2,2,2,2,2,2]"));
    let r = rows(&o);
    assert_eq!(r[0], "k,a_k,n_k,m_k,dist_m_k_theta,log2_dist");
    assert_eq!(r.len(), 11);
    assert!(r[10].starts_with("9,2,3363,2378,"));
    assert!(text.lines().filter(|l| l.starts_with("# PASS")).count() >= 4);
    assert!(!text.contains("# FAIL"));
}

#[test]
fn liouville_partial_sum() {
    let o = divcorr(&["cf", "--construct", "taubeta:2/1:4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("53249/65536,0.8125152587890625,"));
}

#[test]
fn jarnik_construction_reports_partial_prefix() {
    let o = divcorr(&["cf", "--construct", "jarnik:expexp:6"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("(1 of 6 quotients)"));
    assert!(stderr(&o).contains("resource limit"));
}

#[test]
fn insufficient_points_exit_one() {
    let o = divcorr(&[
        "correlate",
        "--theta",
        "rat:2/1",
        "--xmin",
        "10",
        "--xmax",
        "100",
        "--points",
        "2",
        "--fit",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(rows(&o).len(), 3);
}

#[test]
fn verify_suites_pass() {
    for suite in ["cf", "lambda", "spectral"] {
        let o = divcorr(&["verify", "--suite", suite]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stdout(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn large_integers_are_json_strings() {
    let o = divcorr(&[
        "cf", "--theta", "surd:2", "--terms", "50", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["command"], "cf");
    let convs = doc["data"]["convergents"].as_array().unwrap();
    assert_eq!(convs.len(), 50);
    assert!(convs[5]["m_k"].is_i64());
    let last = &convs[49]["m_k"];
    assert!(last.is_string());
    assert_eq!(last.as_str().unwrap(), "4866752642924153522");
}

#[test]
fn json_errors_keep_the_document() {
    let o = divcorr(&["delta", "--x", "0.5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(doc["error"].as_str().unwrap().contains("domain"));
}

#[test]
fn precision_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_divcorr"))
        .args(["delta", "--x", "10"])
        .env("DIVCORR_PRECISION", "128")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("precision_bits=128"));
}

#[test]
fn output_does_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for threads in ["1", "4"] {
        let path = dir.path().join(format!("grid-{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_divcorr"))
            .args([
                "correlate",
                "--theta",
                "surd:2",
                "--xmin",
                "1e3",
                "--xmax",
                "2e5",
                "--points",
                "7",
                "--fit",
            ])
            .args(["--threads", threads])
            .stdout(Stdio::from(File::create(&path).unwrap()))
            .status()
            .unwrap();
        assert!(status.success());
        paths.push(path);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn scan_and_spectral() {
    let o = divcorr(&[
        "scan",
        "--theta",
        "taubeta:2/1:4",
        "--psi",
        "exp:3",
        "--bound",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# hits 1 certified_through=1000 complete=true"));
    let o = divcorr(&["spectral", "--theta", "surd:2", "--x", "16", "--t", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&o);
    let fields: Vec<&str> = r[1].split(',').collect();
    assert_eq!((fields[8], fields[9]), ("19", "45"));
}
