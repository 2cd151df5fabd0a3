use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_willmore-lab")).args(args).envs(env.iter().copied()).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), json)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_energy_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("clifford.s3m");
    let (code, gen) = run(&["gen", "--surface", "clifford", "--res", "24", "--out", path(&mesh)]);
    assert_eq!(code, 0);
    assert_eq!(gen["results"]["genus"], 1);
    assert_eq!(gen["results"]["faces"], 2 * 24 * 24);

    let (code, e) = run(&["energy", "--in", path(&mesh)]);
    assert_eq!(code, 0, "{e}");
    let w = e["results"]["willmore"].as_f64().unwrap();
    assert!((w - 2.0 * std::f64::consts::PI.powi(2)).abs() < 0.2, "{w}");
    assert_eq!(e["pass"], true);
}

#[test]
fn cubical_audits_pass() {
    let (code, r) = run(&["cubical", "--audit", "retraction"]);
    assert_eq!(code, 0);
    assert_eq!(r["checks"].as_array().unwrap().len(), 6);
    let (code, _) = run(&["cubical", "--audit", "boundary"]);
    assert_eq!(code, 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# energy run\nsurface = gsphere\nr = 0.5\nres = 16\n").unwrap();
    let (code, a) = run(&["energy", "--config", path(&cfg)]);
    assert_eq!(code, 0, "{a}");
    assert_eq!(a["inputs"]["surface"]["res"], 16);
    let (_, b) = run(&["energy", "--config", path(&cfg), "--res", "20"]);
    assert_eq!(b["inputs"]["surface"]["res"], 20);
    assert_eq!(b["inputs"]["surface"]["r"], 0.5);
}

#[test]
fn errors_are_json_with_exit_code_two() {
    let (code, r) = run(&["energy", "--surface", "klein"]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "invalid-input");
    assert_eq!(r["pass"], false);

    let (code, r) = run(&["degree", "--surface", "clifford", "--res", "16"]);
    assert_eq!(code, 2);
    assert!(r["error"]["message"].as_str().unwrap().contains("--seed"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.s3m");
    std::fs::write(&bad, "not a mesh\n").unwrap();
    let (code, r) = run(&["energy", "--in", path(&bad)]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "format");
}

#[test]
fn floats_have_at_most_twelve_significant_digits() {
    let (_, r) = run(&["energy", "--surface", "clifford", "--res", "16"]);
    fn walk(v: &Value) {
        match v {
            Value::Number(n) if n.is_f64() => {
                let s = format!("{:e}", n.as_f64().unwrap());
                let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
                assert!(mantissa.len() <= 12, "{s}");
            }
            Value::Array(a) => a.iter().for_each(walk),
            Value::Object(o) => o.values().for_each(walk),
            _ => {}
        }
    }
    walk(&r);
}

#[test]
fn sampling_is_deterministic_across_runs_and_workers() {
    let args = ["degree", "--surface", "clifford", "--res", "24", "--samples", "4000", "--seed", "9"];
    let (_, a) = run_env(&args, &[("WILLMORE_LAB_WORKERS", "1")]);
    let (_, b) = run_env(&args, &[("WILLMORE_LAB_WORKERS", "4")]);
    let (_, c) = run(&args);
    assert_eq!(a["results"], b["results"]);
    assert_eq!(b["results"], c["results"]);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let (code, r) = run(&["sweep", "--surface", "clifford", "--res", "24", "--vgrid", "2", "--tgrid", "5", "--out", path(&csv)]);
    assert_eq!(code, 0, "{r}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 16 * 5);
}
