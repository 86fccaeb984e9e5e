use std::path::Path;
use std::process::{Command, Output};

fn glil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glil")).args(args).output().unwrap()
}

fn glil_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glil"))
        .args(args)
        .env("GLIL_THREADS", threads)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn solve_square_prints_both_moments() {
    let dir = tempfile::tempdir().unwrap();
    let out = glil(&["solve", "--payoff", "square", "--band", "0.5,1.0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(dir.path());
    assert!((m["residuals"]["upper"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!((m["residuals"]["lower"].as_f64().unwrap() - 0.25).abs() < 1e-3);
    let table = std::fs::read_to_string(dir.path().join("value_function.csv")).unwrap();
    assert!(table.starts_with("x,upper,lower\n"));
}

#[test]
fn solve_degenerate_band_gives_gaussian_relu() {
    let out = glil(&["solve", "--payoff", "relu", "--band", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for line in text.lines().filter(|l| l.starts_with("upper") || l.starts_with("lower")) {
        let v: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-3, "{line}");
    }
}

#[test]
fn invalid_band_is_a_config_error() {
    let out = glil(&["solve", "--band", "1.0,0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_lo <= sigma_hi"));
}

#[test]
fn short_horizon_is_rejected() {
    let out = glil(&["lil", "--N", "2", "--master-seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stochastic_commands_need_a_master_seed() {
    assert_eq!(glil(&["lil", "--N", "1000"]).status.code(), Some(2));
    assert_eq!(glil(&["dual", "--sandwich"]).status.code(), Some(2));
}

#[test]
fn failed_verdict_exits_with_four() {
    // a single step is far from the Gaussian limit
    let out = glil(&["dual", "--clt", "--payoff", "relu", "--n", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn zero_shift_row_is_an_equality() {
    let dir = tempfile::tempdir().unwrap();
    let out = glil(&["dual", "--lemma5", "--b", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("lemma5.csv")).unwrap();
    let row = table.lines().nth(1).unwrap();
    assert!(row.starts_with("\"lemma7_phi(1,1)\",0,1,"), "{row}");
    let fields: Vec<&str> = row.rsplit(',').collect();
    // payoff,b,factor,lhs,rhs,tolerance,pass read from the right
    assert_eq!(fields[2], fields[3]);
    assert_eq!(fields[0], "true");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"band": "0.5,2.0", "payoff": "relu", "format": "json"}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = glil(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--payoff",
        "square",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(&out_dir);
    assert_eq!(m["settings"]["payoff"], "square");
    assert!((m["residuals"]["upper"].as_f64().unwrap() - 4.0).abs() < 1e-2);
    assert!(out_dir.join("value_function.json").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"bnad": "0.5,1.0"}"#).unwrap();
    assert_eq!(glil(&["solve", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn coin_tables_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = glil(&["capacity", "--bc2", "--p", "0.5", "--M", "20", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(dir.path());
    assert_eq!(m["residuals"]["bc2_miss"].as_f64().unwrap(), 2f64.powi(-20));
    assert!(dir.path().join("bc2.csv").exists() && dir.path().join("bc1.csv").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let args = |dir: &Path| {
        vec![
            "lil".to_string(),
            "--N".into(),
            "1e5".into(),
            "--master-seed".into(),
            "7".into(),
            "--strategies".into(),
            "const:1,feedback:0.25,random:2".into(),
            "--cluster".into(),
            "--theorem1".into(),
            "--b".into(),
            "0,0.3".into(),
            "--out".into(),
            dir.to_str().unwrap().to_string(),
        ]
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let aa = args(a.path());
    let bb = args(b.path());
    let oa = glil_with_threads(&aa.iter().map(String::as_str).collect::<Vec<_>>(), "1");
    let ob = glil_with_threads(&bb.iter().map(String::as_str).collect::<Vec<_>>(), "4");
    assert_eq!(oa.status.code(), ob.status.code());
    let files: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|f| f != "manifest.json")
        .collect();
    assert!(files.len() > 5);
    for f in files {
        assert_eq!(
            std::fs::read(a.path().join(&f)).unwrap(),
            std::fs::read(b.path().join(&f)).unwrap(),
            "{f:?}"
        );
    }
}
