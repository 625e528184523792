use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use prewet::oracle::canonical_fixture;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn prewet(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prewet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .env_remove("PREWET_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exact_on_canonical_spec_matches_frozen_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = prewet(&["exact"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["marginals.csv", "covariance.csv"] {
        let got = fs::read(dir.path().join(name)).unwrap();
        let want = fs::read(Path::new(FIXTURES).join(name)).unwrap();
        assert!(got == want, "{name} differs from the frozen copy");
    }
}

#[test]
fn frozen_csv_agrees_with_enumeration() {
    let law = canonical_fixture().unwrap();
    let mut rdr = csv::Reader::from_path(Path::new(FIXTURES).join("marginals.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["k", "x", "p"]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (k, x, p): (usize, usize, f64) = (
            rec[0].parse().unwrap(),
            rec[1].parse().unwrap(),
            rec[2].parse().unwrap(),
        );
        let want = law.marginals[k][x];
        assert!(
            (p - want).abs() <= 1e-12 * want.max(1e-300) || p == want,
            "P(X_{k} = {x}): {p} vs {want}"
        );
        rows += 1;
    }
    assert_eq!(rows, 7 * 7);
    let mut rdr = csv::Reader::from_path(Path::new(FIXTURES).join("covariance.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["i", "j", "cov"]);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (i, j, c): (usize, usize, f64) = (
            rec[0].parse().unwrap(),
            rec[1].parse().unwrap(),
            rec[2].parse().unwrap(),
        );
        assert!((c - law.covariance[i][j]).abs() <= 1e-12, "Cov({i}, {j})");
    }
}

#[test]
fn negative_lambda_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"bridge": {"lambda": -0.5, "n": 6}}"#);
    let o = prewet(&["exact", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("bridge.lambda"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_bad_syntax_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"sweep": {"lambdas": [1e-3], "replica": 10}}"#);
    let o = prewet(&["scaling", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("sweep"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "{\"bridge\": {\"lambda\": 0.1,\n \"n\": }}");
    let o = prewet(&["exact", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = prewet(&["exact", "--config", "/nonexistent/prewet.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn oracle_check_passes_on_shipped_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let o = prewet(&["oracle-check"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["results"]["passed"], true);
    assert_eq!(summary["results"]["data"]["identities_passed"], true);
}

const SMALL: &str = r#"{
  "bridge": {"lambda": 0.05, "n": 40},
  "sample": {"count": 200},
  "sweep": {"lambdas": [1e-2, 5e-3], "replicas": 2500},
  "coupling": {"horizons": [0.5, 1.0, 1.5, 2.0]}
}"#;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "provenance.json")
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn identical_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for cmd in ["sample", "couple"] {
        let a = dir.path().join(format!("{cmd}-a"));
        let b = dir.path().join(format!("{cmd}-b"));
        let c = dir.path().join(format!("{cmd}-c"));
        for (out, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
            let o = prewet(&[cmd, "--config", &cfg, "--seed", seed], out);
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        }
        assert_eq!(files(&a), files(&b), "{cmd} is not reproducible");
        assert_ne!(files(&a), files(&c), "{cmd} ignores the seed");
    }
}

#[test]
fn jobs_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let one = dir.path().join("one");
    let many = dir.path().join("many");
    assert_eq!(
        prewet(&["sample", "--config", &cfg, "--jobs", "1"], &one).status.code(),
        Some(0)
    );
    assert_eq!(
        prewet(&["sample", "--config", &cfg, "--jobs", "3"], &many)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(files(&one), files(&many));
}

#[test]
fn summary_and_provenance_carry_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = prewet(&["relaxation", "--config", &cfg, "--seed", "5"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let tv = fs::read_to_string(out.join("tv.csv")).unwrap();
    assert!(tv.starts_with("lambda,N,tv\n"));
    for name in ["summary.json", "provenance.json"] {
        let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join(name)).unwrap()).unwrap();
        assert_eq!(v["seed"], 5);
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    }
    let p: serde_json::Value = serde_json::from_slice(&fs::read(out.join("provenance.json")).unwrap()).unwrap();
    assert!(p["wall_clock_unix"].as_u64().unwrap() > 0);
}

#[test]
fn sweep_commands_write_the_shared_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"sweep": {"lambdas": [1e-2, 5e-3, 2e-3, 1e-3], "t_grid": [2, 3, 4]}}"#,
    );
    for cmd in ["scaling", "tails", "moments", "correlations"] {
        let out = dir.path().join(cmd);
        let o = prewet(&[cmd, "--config", &cfg], &out);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
        assert!(csv.starts_with("lambda,H,quantity,value,stderr\n"), "{cmd}");
    }
    let cov = fs::read_to_string(dir.path().join("correlations/covariance_0.csv")).unwrap();
    assert!(cov.starts_with("i,j,cov\n"));
}

#[test]
fn heatbath_samples_respect_the_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"bridge": {"lambda": 0.3, "n": 6, "b": 1, "k": 6}, "sample": {"count": 50, "method": "heatbath", "sweeps": 5}}"#,
    );
    let out = dir.path().join("out");
    let o = prewet(&["sample", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 50 * 7);
}
