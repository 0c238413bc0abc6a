//! End-to-end tests of the `mallows-lab` binary: exit codes, determinism and
//! golden outputs. Set `MALLOWS_LAB_BLESS=1` to rewrite the golden files.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mallows-lab"));
    c.env_remove("MALLOWS_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    if std::env::var_os("MALLOWS_LAB_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

const RENEWAL: &str = r#"
regime = "renewal"
n_grid = [2000]
replicates = 200
seed = 5
block_samples = 20000

[q_rule]
type = "fixed"
value = 0.5
"#;

#[test]
fn sample_is_deterministic_and_one_line() {
    let args = ["sample", "--n", "10", "--q", "0.5", "--seed", "1"];
    let a = stdout_ok(&args);
    assert_eq!(a, stdout_ok(&args));
    assert_eq!(a.lines().count(), 1);
    let mut values: Vec<usize> = a.split_whitespace().map(|t| t.parse().unwrap()).collect();
    values.sort_unstable();
    assert_eq!(values, (1..=10).collect::<Vec<_>>());
    golden("sample_lines.txt", &a);
}

#[test]
fn q_above_one_emits_the_reversal() {
    for seed in ["1", "2", "3"] {
        let low = stdout_ok(&["sample", "--n", "12", "--q", "0.5", "--seed", seed, "--replicates", "4"]);
        let high = stdout_ok(&["sample", "--n", "12", "--q", "2.0", "--seed", seed, "--replicates", "4"]);
        for (l, h) in low.lines().zip(high.lines()) {
            let mut l: Vec<&str> = l.split(' ').collect();
            l.reverse();
            assert_eq!(l.join(" "), h);
        }
    }
}

#[test]
fn usage_and_config_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["sample", "--n", "5", "--q", "0.5", "--bogus"],
        &["frobnicate"],
        &["sample", "--n", "0", "--q", "0.5"],
        &["sample", "--n", "5", "--q", "-1"],
        &["sample", "--n", "5", "--q", "0.5", "--replicates", "0"],
        &["count", "--pattern", "2 2", "--perm", "12"],
        &["count", "--pattern", "21", "--n", "5", "--q", "0.5", "--format", "lines"],
        &["count", "--pattern", "21453", "--n", "100000", "--q", "0.5"],
        &["blocks", "--n", "5", "--q", "1.0"],
        &["coupled", "--n", "5", "--q", "1.5"],
        &["process", "--pattern", "21", "--n", "5", "--grid", "0:1:0.5"],
        &["process", "--pattern", "21", "--n", "5", "--grid", "0:0:0.1"],
        &["process", "--pattern", "21", "--n", "5", "--grid", "0.5:0.1:0.1"],
        &["estimate", "--pattern", "21", "--q", "0"],
        &["experiment", "--config", "/nonexistent/experiment.toml"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(!err.trim().is_empty(), "{args:?} printed no diagnostic");
        assert!(out.stdout.is_empty(), "{args:?} wrote output before failing");
    }
    let out = bin().args(["sample", "--n", "3", "--q", "0.5"]).env("MALLOWS_LAB_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_every_schema() {
    for (cmd, header) in [
        ("sample", "replicate,n,q,inv,permutation"),
        ("count", "replicate,n,q,pattern,occ"),
        ("blocks", "replicate,index,kind,start,size,permutation"),
        ("coupled", "replicate,n,q,error_count,errors,tau,u"),
        ("process", "t,occ,e_estimate,centered"),
        ("estimate", "name,estimate,se,target,pass"),
        ("experiment", "name,estimate,se,target,pass"),
    ] {
        let help = stdout_ok(&[cmd, "--help"]);
        assert!(help.contains(header), "{cmd} --help lacks `{header}`");
    }
}

#[test]
fn csv_outputs_match_golden_files() {
    let cases: &[(&str, &[&str])] = &[
        ("sample.csv", &["sample", "--n", "6", "--q", "0.7", "--seed", "4", "--replicates", "5", "--format", "csv"]),
        ("sample_right.csv", &["sample", "--n", "6", "--q", "0.7", "--side", "right", "--seed", "4", "--replicates", "5", "--format", "csv"]),
        ("count_given.csv", &["count", "--pattern", "231", "--perm", "3,1,4,5,2,6"]),
        ("count_sampled.csv", &["count", "--pattern", "1324", "--n", "30", "--q", "0.9", "--replicates", "4", "--seed", "9"]),
        ("blocks.csv", &["blocks", "--n", "15", "--q", "0.6", "--replicates", "3", "--seed", "2"]),
        ("coupled.csv", &["coupled", "--n", "12", "--q", "0.9", "--replicates", "4", "--seed", "6"]),
        ("process.csv", &["process", "--pattern", "132", "--n", "40", "--grid", "0:0.8:0.2", "--block-samples", "0", "--seed", "8"]),
        ("estimate.csv", &["estimate", "--pattern", "21", "--q", "0.5", "--replicates", "5000", "--seed", "3"]),
    ];
    for (name, args) in cases {
        let out = stdout_ok(args);
        assert!(out.ends_with('\n'));
        golden(name, &out);
    }
}

#[test]
fn json_mirrors_csv() {
    let args = ["coupled", "--n", "12", "--q", "0.9", "--replicates", "4", "--seed", "6"];
    let csv_text = stdout_ok(&args);
    let json_text = stdout_ok(&[&args[..], &["--format", "json"]].concat());
    let rows: serde_json::Value = serde_json::from_str(&json_text).unwrap();
    let rows = rows.as_array().unwrap();
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(rows.len(), lines.clone().count());
    for (row, line) in rows.iter().zip(lines) {
        let keys: Vec<&str> = row.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, header);
        assert_eq!(row["tau"].as_str().unwrap(), line.split(',').nth(5).unwrap());
    }
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let args = ["count", "--pattern", "321", "--n", "300", "--q", "0.95", "--replicates", "64", "--seed", "11"];
    let outputs: Vec<Vec<u8>> = ["1", "2", "4"]
        .iter()
        .map(|k| {
            let out = bin().args(args).env("MALLOWS_LAB_THREADS", k).output().unwrap();
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn experiment_writes_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("renewal.toml");
    fs::write(&cfg, RENEWAL).unwrap();
    let cfg = cfg.to_str().unwrap();

    let csv_path = dir.path().join("report.csv");
    let out = run(&["experiment", "--config", cfg, "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let report = fs::read_to_string(&csv_path).unwrap();
    assert!(report.starts_with("name,estimate,se,target,pass\n"));
    assert!(report.contains("kn_over_n[n=2000]"));
    golden("experiment_renewal.csv", &report);

    // The JSON report echoes the config.
    let json = stdout_ok(&["experiment", "--config", cfg, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["regime"], "renewal");

    // Overrides reach the run.
    let json = stdout_ok(&["experiment", "--config", cfg, "--format", "json", "--seed", "6"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["config"]["seed"], 6);

    // Zero allowed standard errors cannot pass.
    let strict = dir.path().join("strict.toml");
    fs::write(&strict, format!("{RENEWAL}\n[thresholds]\nse_multiplier = 0.0\nvar_rel_tol = 0.0\n")).unwrap();
    let out = run(&["experiment", "--config", strict.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("false"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, format!("extra = 1\n{RENEWAL}")).unwrap();
    assert_eq!(run(&["experiment", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        run(&["experiment", "--config", cfg, "--replicates", "1"]).status.code(),
        Some(2)
    );
}
