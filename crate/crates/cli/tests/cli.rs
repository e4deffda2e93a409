use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dctc(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dctc"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("DCTC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_SWEEP: [&str; 10] = [
    "sweep",
    "--system",
    "u2",
    "--family",
    "mixed",
    "--seed",
    "7",
    "--n-random",
    "12",
    "--s-values",
];

fn sweep_csv(dir: &Path, jobs: &str) -> Vec<u8> {
    let mut args = SMALL_SWEEP.to_vec();
    args.extend(["0,0.5,1", "--jobs", jobs]);
    let o = dctc(dir, &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read(dir.join("sweep-u2-mixed.csv")).unwrap()
}

#[test]
fn sweep_is_byte_identical_across_runs_and_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let first = sweep_csv(&a, "1");
    assert_eq!(first, sweep_csv(&b, "1"));
    assert_eq!(first, sweep_csv(&c, "4"));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("experiment,family,s,eps_a,eps_b,p,task,seed,status,entropy_bits,residual,steps\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 12 * 2);

    let m = manifest(&a);
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["experiment"]["master_seed"], 7);
    assert_eq!(m["artifacts"][0], "sweep-u2-mixed.csv");
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn maxent_prints_third_state() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dctc(tmp.path(), &["maxent", "--system", "u2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("diag(0.333333, 0.000000, 0.333333, 0.333333)"), "{out}");
    assert!(out.contains("1.584963 bits"));
    assert!(tmp.path().join("maxent-u2.json").exists());
}

#[test]
fn fixedpoints_describes_family() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dctc(tmp.path(), &["fixedpoints", "--system", "u2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("real dimension: 3"));
    assert!(out.contains("diag(a, 0, b, b)"), "{out}");
}

#[test]
fn demos_write_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dctc(tmp.path(), &["demo", "kraus-refutation"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0.353553"));

    let o = dctc(tmp.path(), &["demo", "u1-cycle"]);
    assert!(stdout(&o).contains("period 3"));
    let csv = fs::read_to_string(tmp.path().join("demo-u1-cycle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let o = dctc(tmp.path(), &["demo", "u3-ordering"]);
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(tmp.path().join("u3-ordering.txt")).unwrap();
    assert!(report.contains("[SELECTED]"));
    assert_eq!(manifest(tmp.path())["command"], "demo u3-ordering");
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["demo", "nope"],
        vec!["frobnicate"],
        vec!["sweep", "--system", "u3"],
        vec!["surface", "--p", "1.5"],
        vec!["maxent", "--system", "u7"],
    ] {
        let o = dctc(tmp.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn config_file_unknown_key_exits_one_and_names_line() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    fs::write(&conf, "system = u2\nspeed = fast\n").unwrap();
    let o = dctc(tmp.path(), &["maxent", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.conf:2") && err.contains("speed = fast"), "{err}");
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    fs::write(&conf, "# surface run\nfamily = pure\nstep = 0.5\np = 0.2\n").unwrap();
    let o = dctc(
        tmp.path(),
        &["surface", "--config", conf.to_str().unwrap(), "--family", "mixed"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(tmp.path());
    assert_eq!(m["experiment"]["family"], "Mixed");
    assert_eq!(m["experiment"]["p"], 0.2);
    let csv = fs::read_to_string(tmp.path().join("surface-mixed-revised.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
}

#[test]
fn numerical_failure_exits_two_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dctc(tmp.path(), &["kraus", "--system", "u1"]);
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(tmp.path());
    assert_eq!(m["exit_code"], 2);
    assert!(m["error"].as_str().unwrap().contains("numerical failure"));
}
