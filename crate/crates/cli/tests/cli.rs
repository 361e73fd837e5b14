use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impdde"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("IMPDDE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn shipped_configs_validate() {
    let dir = tempfile::tempdir().unwrap();
    let mut names: Vec<_> = std::fs::read_dir(config(""))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let out = run(&["validate"], &config(&name), dir.path());
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join("hypotheses.csv").exists());
    }
}

#[test]
fn certificate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pass = run(&["certify", "--which", "example"], &config("example24_pass.toml"), dir.path());
    assert_eq!(code(&pass), 0, "{}", String::from_utf8_lossy(&pass.stderr));
    let fail = run(&["certify", "--which", "t5"], &config("example24_fail.toml"), dir.path());
    assert_eq!(code(&fail), 1);
    let csv = std::fs::read_to_string(dir.path().join("certificate.csv")).unwrap();
    assert!(csv.starts_with("condition,lhs,rhs,margin,pass"));
    assert_eq!(code(&run(&["certify", "--which", "t6"], &config("lag_decay_pass.toml"), dir.path())), 0);
    assert_eq!(code(&run(&["certify", "--which", "t6"], &config("lag_decay_fail.toml"), dir.path())), 1);
}

#[test]
fn bad_inputs_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let decreasing = run(&["validate"], &fixture("decreasing_times.toml"), dir.path());
    assert_eq!(code(&decreasing), 3, "{}", String::from_utf8_lossy(&decreasing.stderr));
    let bad = run(&["validate"], &fixture("bad_expression.toml"), dir.path());
    assert_eq!(code(&bad), 2);
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("terms[0]"), "{stderr}");
    let missing = run(&["validate"], &fixture("no_such_file.toml"), dir.path());
    assert_eq!(code(&missing), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cases: [&[&str]; 3] = [
        &["simulate", "--step", "0.01", "--horizon", "5"],
        &["fundamental", "--s", "0,0.5", "--horizon", "4", "--step", "0.01"],
        &["decay", "--s", "0,2.5", "--duration", "5", "--step", "0.01"],
    ];
    for args in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(code(&run(args, &config("lag_decay_pass.toml"), a.path())), 0);
        assert_eq!(code(&run(args, &config("lag_decay_pass.toml"), b.path())), 0);
        let mut files: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(!files.is_empty());
        for f in files {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap();
            assert_eq!(x, y, "{args:?}: {f:?} differs");
        }
    }
}

#[test]
fn simulate_marks_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--step", "0.05", "--horizon", "2"], &config("lag_decay_pass.toml"), dir.path());
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    let jump = header.iter().position(|h| h == "is_jump").unwrap();
    let jumps: Vec<f64> = rows
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[jump] == "true" || &r[jump] == "1")
        .map(|r| r[0].parse().unwrap())
        .collect();
    assert_eq!(jumps, vec![1.0, 2.0]);
}

#[test]
fn probe_reports_membership() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["probe", "--step", "0.01"], &config("example24_pass.toml"), dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("probe.csv")).unwrap();
    assert!(text.starts_with("case,quantity,horizon,norm,increment"));
}

#[test]
fn reconstruct_agrees_with_direct_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["reconstruct", "--t", "0.5,1.5", "--step", "0.01", "--qstep", "0.01"],
        &config("example24_pass.toml"),
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("reconstruct.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    for r in rows.records() {
        let r = r.unwrap();
        let err: f64 = r[r.len() - 1].parse().unwrap();
        assert!(err < 1e-3, "row {r:?}");
    }
}
