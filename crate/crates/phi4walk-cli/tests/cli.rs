//! End-to-end runs of the `phi4walk` binary.

use std::process::{Command, Output};

fn phi4walk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phi4walk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(phi4walk(&["bogus"]).status.code(), Some(2));
    assert_eq!(phi4walk(&["walk", "--kind", "sideways", "--n", "4"]).status.code(), Some(2));
}

#[test]
fn enumerate_order_two_has_the_single_banana_matrix() {
    let o = phi4walk(&["enumerate", "--r", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["rows"], serde_json::json!([[0, 2], [2, 0]]));
    assert_eq!(v[0]["syf"], 2);
}

#[test]
fn weights_of_the_banana_matrix() {
    let dir = std::env::temp_dir().join(format!("phi4walk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.json");
    std::fs::write(&path, r#"{"q": 2, "rows": [[0, 2], [2, 0]]}"#).unwrap();
    let o = phi4walk(&["weights", "--matrix", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["wei"], serde_json::json!({"1": "2", "2": "2"}));
    assert_eq!(v[0]["eul"], "2");
}

#[test]
fn integrate_emits_csv_with_declared_columns() {
    let o = phi4walk(&["integrate", "--r", "2", "--samples", "20000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("matrix_id,gamma_g0,stderr,n_eval"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    // Γ_G(0) of the four-edge banana is 7ζ(3) ≈ 8.4144.
    assert!((row[1] - 8.414_398_3).abs() < 5.0 * row[2], "{row:?}");
}

#[test]
fn transform_check_passes_and_writes_to_out_dir() {
    let dir = std::env::temp_dir().join(format!("phi4walk-cli-out-{}", std::process::id()));
    let o = phi4walk(&["transform-check", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("transform-check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn edge_requires_constants_before_doing_work() {
    let o = phi4walk(&["edge", "--which", "0", "--x-grid", "-10:-1:4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let o = phi4walk(&["edge", "--which", "2", "--x-grid", "-10:-1:4", "--synthetic"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn walk_output_is_reproducible() {
    let args = ["walk", "--kind", "free", "--n", "512", "--k", "1", "--batch", "1000", "--seed", "11"];
    let a = phi4walk(&args);
    let b = phi4walk(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["m2"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_all_is_byte_identical_across_runs() {
    let args = ["verify-all", "--quick", "--seed", "7"];
    let a = phi4walk(&args);
    let b = phi4walk(&args);
    assert!(matches!(a.status.code(), Some(0 | 1)), "{:?}", a.status);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["order"], 3);
    assert!(v["checks"].as_array().unwrap().len() > 50);
}
