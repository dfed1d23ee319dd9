//! End-to-end runs of the installed binary: pipelines that chain command
//! outputs, seed resolution, error reporting, and the report bundles.

use std::path::Path;
use std::process::{Command, Output};

fn voltsim(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_voltsim"));
    cmd.args(args);
    cmd.env_remove("VOLTSIM_SEED");
    cmd
}

fn run_ok(args: &[&str]) -> Output {
    let out = voltsim(args).output().unwrap();
    assert!(
        out.status.success(),
        "voltsim {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn manifest(dir: &Path, command: &str) -> serde_json::Value {
    let path = dir.join(format!("manifest-{command}.json"));
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

#[test]
fn chip_pipeline_shares_one_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let fvm = run_ok(&[
        "fvm", "--platform", "vc707", "--chip-seed", "2", "--verify", "--out", out,
    ]);
    assert!(stdout(&fvm).contains("fip=ok"));
    assert!(stdout(&fvm).contains("tiles=2060"));

    let fvm_json = dir.path().join("fvm.json");
    let cluster = run_ok(&[
        "cluster", "--platform", "vc707", "--chip-seed", "2",
        "--fvm", fvm_json.to_str().unwrap(), "--seed", "2", "--out", out,
    ]);
    let text = stdout(&cluster);
    for class in ["low", "mid", "high"] {
        assert!(text.contains(&format!("class={class}")), "missing {class} line:\n{text}");
    }

    let placement = run_ok(&[
        "placement", "--platform", "vc707", "--chip-seed", "2",
        "--fvm", fvm_json.to_str().unwrap(), "--strategy", "icbp-2",
        "--topology", "synthetic", "--seed", "2", "--out", out,
    ]);
    assert!(stdout(&placement).contains("blocks=29"));

    for f in [
        "fvm.json", "manifest-fvm.json",
        "clusters.csv", "clusters.json", "manifest-cluster.json",
        "placement.tcl", "assignment.json", "manifest-placement.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing from shared output dir");
    }

    let tcl = std::fs::read_to_string(dir.path().join("placement.tcl")).unwrap();
    assert!(tcl.contains("create_pblock"));
    assert!(tcl.contains("RAMB18_X"), "constraints should pin BRAM sites");
}

#[test]
fn nn_eval_feeds_optimal_voltage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    run_ok(&["power", "--platform", "vc707", "--out", out]);
    let eval = run_ok(&[
        "nn-eval", "--platform", "vc707", "--chip-seed", "3", "--chip-scale", "20",
        "--seed", "3", "--samples", "64", "--runs", "1", "--out", out,
    ]);
    assert!(stdout(&eval).contains("clean_error_pct="));

    let power_csv = dir.path().join("power.csv");
    let eval_csv = dir.path().join("eval.csv");
    let pick = run_ok(&[
        "optimal-voltage",
        "--power", power_csv.to_str().unwrap(),
        "--error", eval_csv.to_str().unwrap(),
        "--out", out,
    ]);
    let text = stdout(&pick);
    let mv: u32 = text
        .lines()
        .find_map(|l| l.strip_prefix("optimal_voltage_mv="))
        .expect("missing optimal_voltage_mv line")
        .trim()
        .parse()
        .unwrap();
    assert!((540..=610).contains(&mv) && mv % 10 == 0, "picked off-grid voltage {mv}");
    assert!(dir.path().join("tradeoff.csv").is_file());
    assert!(dir.path().join("manifest-optimal-voltage.json").is_file());
}

#[test]
fn seed_comes_from_flag_then_env_then_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let base = ["cluster", "--platform", "kc705", "--chip-seed", "1", "--out", out];

    let mut env_only = voltsim(&base);
    env_only.env("VOLTSIM_SEED", "9");
    assert!(env_only.output().unwrap().status.success());
    assert_eq!(manifest(dir.path(), "cluster")["config"]["seed"], 9);

    let mut flag_wins = voltsim(&[&base[..], &["--seed", "5"]].concat());
    flag_wins.env("VOLTSIM_SEED", "9");
    assert!(flag_wins.output().unwrap().status.success());
    assert_eq!(manifest(dir.path(), "cluster")["config"]["seed"], 5);

    run_ok(&base);
    assert_eq!(manifest(dir.path(), "cluster")["config"]["seed"], 1);

    let mut bad = voltsim(&base);
    bad.env("VOLTSIM_SEED", "not-a-number");
    let out = bad.output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn failures_exit_nonzero_with_error_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let unknown = voltsim(&["sweep", "--platform", "nope", "--out", out]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    let err = String::from_utf8_lossy(&unknown.stderr).to_string();
    assert!(err.starts_with("error:"), "stderr was: {err}");
    assert!(err.contains("nope"));

    let crash = voltsim(&[
        "ecc-eval", "--platform", "vc707", "--voltage", "530", "--out", out,
    ])
    .output()
    .unwrap();
    assert_eq!(crash.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&crash.stderr).starts_with("error:"));

    // Images without labels is a CLI contract violation, caught by the parser.
    let half = voltsim(&[
        "nn-eval", "--platform", "vc707", "--images", "x.idx", "--out", out,
    ])
    .output()
    .unwrap();
    assert!(!half.status.success());
}

#[test]
fn report_bundles_derive_from_command_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    run_ok(&[
        "sweep", "--platform", "vc707", "--chip-seed", "4", "--seed", "4",
        "--pattern", "ffff", "--runs", "2", "--out", out,
    ]);
    let sweep_csv = dir.path().join("sweep.csv");
    let header = std::fs::read_to_string(&sweep_csv).unwrap();
    assert!(header.starts_with(
        "voltage_mv,run,faults_total,faults_per_mbit,correctable,detectable,undetectable,power_w"
    ));

    run_ok(&[
        "report", "fault-power", "--sweep", sweep_csv.to_str().unwrap(), "--out", out,
    ]);
    let fp = std::fs::read_to_string(dir.path().join("fault-power.csv")).unwrap();
    assert!(fp.starts_with("voltage_mv,median_faults_per_mbit,power_w"));
    assert!(dir.path().join("manifest-report-fault-power.json").is_file());

    run_ok(&[
        "report", "compare",
        "--a", sweep_csv.to_str().unwrap(), "--b", sweep_csv.to_str().unwrap(),
        "--label-a", "base", "--label-b", "again", "--out", out,
    ]);
    let cmp = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(cmp.contains("base") && cmp.contains("again"));

    run_ok(&[
        "nn-eval", "--platform", "vc707", "--chip-seed", "4", "--chip-scale", "20",
        "--seed", "4", "--samples", "32", "--runs", "2", "--voltage", "540", "--out", out,
    ]);
    let eval_csv = dir.path().join("eval.csv");
    run_ok(&[
        "report", "placement-bars", "--eval", eval_csv.to_str().unwrap(),
        "--voltage", "540", "--out", out,
    ]);
    let bars = std::fs::read_to_string(dir.path().join("placement-bars.csv")).unwrap();
    assert!(bars.starts_with("placement,ecc,median_error_pct"));
    assert!(bars.contains("default"));
}

#[test]
fn fvm_import_round_trips_through_every_consumer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    run_ok(&["fvm", "--platform", "kc705", "--chip-seed", "6", "--out", out]);
    let fvm_json = dir.path().join("fvm.json");
    let fvm_arg = fvm_json.to_str().unwrap();

    let direct = run_ok(&[
        "sweep", "--platform", "kc705", "--chip-seed", "6", "--seed", "6",
        "--pattern", "aaaa", "--runs", "2", "--out", out,
    ]);
    let imported_dir = tempfile::tempdir().unwrap();
    let imported = run_ok(&[
        "sweep", "--platform", "kc705", "--chip-seed", "6", "--seed", "6",
        "--pattern", "aaaa", "--runs", "2", "--fvm", fvm_arg,
        "--out", imported_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        stdout(&direct),
        stdout(&imported),
        "a sweep over an imported map must match the freshly generated one"
    );
    assert_eq!(
        std::fs::read(dir.path().join("sweep.csv")).unwrap(),
        std::fs::read(imported_dir.path().join("sweep.csv")).unwrap()
    );
}
