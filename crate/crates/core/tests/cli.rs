use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isosoliton"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn trace_writes_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["trace", "--k", "1", "--n", "2", "--seed-r", "0", "--seed-psi", "0.5", "--format", "csv,json,svg"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "trace.json", "psi.svg", "vprime.svg", "v.svg"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("r,psi,vprime,v\n"));
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 10 && rows.iter().all(|r| r.len() == 4));
    let j = read_json(&dir.path().join("trace.json"));
    assert_eq!(j["events"]["left"]["kind"], "BlowUpMinus");
    assert_eq!(j["events"]["right"]["kind"], "BlowUpPlus");
}

#[test]
fn classify_endpoint_solutions() {
    let dir = tempfile::tempdir().unwrap();
    for (end, ty) in [("-1", "VI"), ("1", "VII")] {
        let o = run(&["classify", "--k", "2", "--n", "3", "--endpoint", end], dir.path());
        assert!(o.status.success());
        let j = read_json(&dir.path().join("classify.json"));
        assert_eq!(j["type"]["v"], ty);
    }
}

#[test]
fn sweep_histogram_and_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--k", "1", "--n", "2", "--grid", "5x5", "--with-endpoints", "--strict"], dir.path());
    assert!(o.status.success());
    let hist = std::fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    let total: usize = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 27);
    assert!(hist.contains("Unlisted,0"));
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn verify_grim_reaper() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--check", "grim-reaper", "--points", "200"], dir.path());
    assert!(o.status.success());
    assert!(dir.path().join("verify.json").exists());
}

#[test]
fn domain_of_endpoint_type() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["domain", "--k", "1", "--n", "2", "--type", "VI"], dir.path());
    assert!(o.status.success());
    let j = read_json(&dir.path().join("domain.json"));
    assert_eq!(j["domain"]["description"]["kind"], "poles");
    assert_eq!(j["domain"]["contains_focal_minus"], true);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["trace", "--k", "5", "--n", "2", "--seed-r", "0", "--seed-psi", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid parameters"));
    let o = run(&["trace", "--k", "1", "--n", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_isosoliton"))
        .args(["classify", "--k", "1", "--n", "2", "--seed-r", "0", "--seed-psi", "0"])
        .env("ISOSOLITON_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("classify.json").exists());
}
