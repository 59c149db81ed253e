use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn plap(dir: &Path, args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_plap"));
    cmd.current_dir(dir).args(args).env_remove("PLAP_SEED");
    if let Some(s) = seed {
        cmd.env("PLAP_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn spectrum_table_matches_squares() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plap(tmp.path(), &["spectrum", "--out", "o"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("o/spectrum.csv")).unwrap();
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["n", "lambda_formula", "lambda_shooting", "rel_err"]);
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    for (n, row) in rows.iter().enumerate() {
        assert_eq!(row[1], (n * n) as f64);
        assert!((row[2] - row[1]).abs() <= 1e-9 * row[1].max(1.0), "{row:?}");
    }
    assert_eq!(report(&tmp.path().join("o"))["status"], "ok");
    assert!(tmp.path().join("o/run.svg").exists());
}

#[test]
fn audit_of_superquadratic_example_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["audit", "--potential", "thm1_example:mu=3,p=2", "--b", "1", "--mu", "3", "--M", "1", "--x-star", "3,0"];
    let out = plap(tmp.path(), &[&args[..], &["--out", "o"]].concat(), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let checks = report(&tmp.path().join("o"))["result"]["audit"]["checks"].as_array().unwrap().clone();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["verdict"] == "pass"), "{checks:?}");
}

#[test]
fn missing_audit_parameter_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plap(tmp.path(), &["audit", "--potential", "thm1_example:mu=3,p=2", "--out", "o"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x_star"));
}

#[test]
fn malformed_input_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("unknown.toml"), "[problem]\nfoo = 1\n").unwrap();
    std::fs::write(tmp.path().join("section.toml"), "[nonsense]\nx = 1\n").unwrap();
    std::fs::write(tmp.path().join("other.toml"), "command = \"spectrum\"\n").unwrap();
    std::fs::write(tmp.path().join("syntax.toml"), "[problem\n").unwrap();
    for file in ["unknown.toml", "section.toml", "other.toml", "syntax.toml", "absent.toml"] {
        let out = plap(tmp.path(), &["solve", "--config", file], None);
        assert_eq!(out.status.code(), Some(1), "{file}");
    }
    assert_eq!(plap(tmp.path(), &["solve", "--no-such-flag"], None).status.code(), Some(1));
    assert_eq!(plap(tmp.path(), &["solve", "--potential", "nonexistent"], None).status.code(), Some(1));
    assert_eq!(plap(tmp.path(), &["solve", "--p", "1"], None).status.code(), Some(1));
    assert_eq!(plap(tmp.path(), &["solve"], Some("abc")).status.code(), Some(1));
    assert_eq!(plap(tmp.path(), &["--help"], None).status.code(), Some(0));
}

#[test]
fn resolved_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let first = plap(tmp.path(), &["spectrum", "--n-max", "2", "--p", "3", "--out", "a"], None);
    assert_eq!(first.status.code(), Some(0));
    std::fs::copy(tmp.path().join("a/config.json"), tmp.path().join("again.json")).unwrap();
    let second = plap(tmp.path(), &["spectrum", "--config", "again.json", "--out", "a"], None);
    assert_eq!(second.status.code(), Some(0), "{}", String::from_utf8_lossy(&second.stderr));
    let a = std::fs::read(tmp.path().join("again.json")).unwrap();
    let b = std::fs::read(tmp.path().join("a/config.json")).unwrap();
    assert!(a == b, "resolved config changed on reload");
    assert!(tmp.path().join("a/report.json").exists());
}

#[test]
fn toml_sections_merge_over_command_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "[problem]\np = 4\n\n[spectrum]\nn_max = 1\n").unwrap();
    let out = plap(tmp.path(), &["spectrum", "--config", "c.toml", "--out", "o"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/config.json")).unwrap()).unwrap();
    assert_eq!(cfg["problem"]["p"], 4.0);
    assert_eq!(cfg["spectrum"]["n_max"], 1);
    assert!(cfg["problem"]["b"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("s.toml"), "[solver]\nseed = 5\n[spectrum]\nn_max = 1\n").unwrap();
    let seed_of = |out: &str| -> u64 {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join(out).join("config.json")).unwrap()).unwrap();
        v["solver"]["seed"].as_u64().unwrap()
    };
    plap(tmp.path(), &["spectrum", "--config", "s.toml", "--out", "f"], None);
    plap(tmp.path(), &["spectrum", "--config", "s.toml", "--out", "e"], Some("11"));
    plap(tmp.path(), &["spectrum", "--config", "s.toml", "--seed", "13", "--out", "x"], Some("11"));
    assert_eq!((seed_of("f"), seed_of("e"), seed_of("x")), (5, 11, 13));
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = ["multiplicity", "--lambdas", "2,4,8", "--nodes", "48", "--out", "o"];
    let one = plap(a.path(), &[&common[..], &["--jobs", "1"]].concat(), None);
    let three = plap(b.path(), &[&common[..], &["--jobs", "3"]].concat(), None);
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(three.status.code(), Some(0));
    for file in ["report.json", "config.json", "solution.csv", "minimizer.csv"] {
        let x = std::fs::read_to_string(a.path().join("o").join(file)).unwrap();
        let y = std::fs::read_to_string(b.path().join("o").join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
    assert_eq!(report(&a.path().join("o"))["result"]["lambda_star"], 4.0);
}

#[test]
fn wall_time_only_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    plap(tmp.path(), &["spectrum", "--n-max", "1", "--out", "a"], None);
    plap(tmp.path(), &["spectrum", "--n-max", "1", "--wall-time", "--out", "b"], None);
    assert!(report(&tmp.path().join("a")).get("wall_time_s").is_none());
    assert!(report(&tmp.path().join("b"))["wall_time_s"].as_f64().is_some());
}

#[test]
fn formats_select_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plap(tmp.path(), &["spectrum", "--n-max", "1", "--formats", "json", "--out", "o"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("o/report.json").exists());
    assert!(tmp.path().join("o/config.json").exists());
    assert!(!tmp.path().join("o/spectrum.csv").exists());
    assert!(!tmp.path().join("o/run.svg").exists());
}

#[test]
fn nonconvergence_exits_with_two_and_keeps_best_iterate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plap(
        tmp.path(),
        &["solve", "--potential", "quartic", "--p", "2", "--max-iter", "1", "--tol", "1e-14", "--out", "o"],
        None,
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&tmp.path().join("o"))["status"], "failed");
    assert!(tmp.path().join("o/solution.csv").exists());
}
