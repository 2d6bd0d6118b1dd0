use std::process::{Command, Output};

const GAMMA: &str = r#"{"kind":"gamma_shift","params":{"c":0}}"#;

fn mellin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mellin")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_k_grid_is_exp_minus_r() {
    let o = mellin(&["eval-K", "--spec", GAMMA, "--grid", "r=1..20,n=10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = rd.headers().unwrap().clone();
    assert_eq!(&headers[0], "log_r");
    let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    for row in rows {
        let r = row[0].parse::<f64>().unwrap().exp();
        let v = row[2].parse::<f64>().unwrap() * row[4].parse::<f64>().unwrap().exp();
        let want = (-r).exp();
        assert!((v / want - 1.0).abs() < 1e-8, "r={r}: {v} vs {want}");
    }
}

#[test]
fn saddle_json_has_small_residual() {
    let o = mellin(&["saddle", "--spec", GAMMA, "--at", "r=10,psi=0", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    let s = v["s_z_re"].as_f64().unwrap();
    // ψ(s) = log 10 near s = 10.5
    assert!((s - 10.5).abs() < 0.1, "{s}");
}

#[test]
fn verify_moments_passes() {
    let o = mellin(&["verify", "moments", "5", "--spec", GAMMA, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
    assert_eq!(v["cases"].as_array().unwrap().len(), 6);
}

#[test]
fn bad_spec_exits_2() {
    let o = mellin(&["eval-K", "--spec", r#"{"kind":"nope"}"#, "--at", "r=1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn misspelt_parameter_exits_2() {
    let o = mellin(&["eval-K", "--spec", r#"{"kind":"gamma_shift","params":{"shift":1}}"#, "--at", "r=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("shift"));
}

#[test]
fn bad_point_is_echoed() {
    let o = mellin(&["eval-E", "--spec", GAMMA, "--at", "r=-3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("-3"));
}

#[test]
fn missing_spec_file_exits_2() {
    let o = mellin(&["eval-K", "--spec", "/nonexistent/spec.json", "--at", "r=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["eval-E", "--spec", GAMMA, "--grid", "r=1..50,n=8,psi=-pi..pi,m=3", "--format", "json"];
    let a = mellin(&args);
    let b = mellin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 24);
}

#[test]
fn failing_suite_exits_1() {
    // Γ's K ratio converges too slowly for the default targets
    let o = mellin(&["verify", "ratio-k", "--spec", GAMMA, "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], serde_json::Value::Bool(false));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("mellin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.csv");
    let o = mellin(&["moment", "2", "--spec", GAMMA, "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}
