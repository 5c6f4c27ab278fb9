//! Native runs of the demo's JSON entry points.

use phi4walk_demo::{edge_curves_json, kernel_explorer_json, walk_sample_json, walk_statistic_json};

#[test]
fn closed_walk_sample_returns_to_origin() {
    let v = walk_sample_json("closed", 50, 3, "visit-count").unwrap();
    assert_eq!(v["length"], 100);
    let pos = v["positions"].as_array().unwrap();
    assert_eq!(pos.len(), 101);
    assert_eq!(pos[100], serde_json::json!([0, 0]));
    // Visits over times 1..=L add up to L.
    let hist: Vec<u64> = serde_json::from_value(v["histogram"].clone()).unwrap();
    let total: u64 = hist.iter().enumerate().map(|(m, c)| m as u64 * c).sum();
    assert_eq!(total, 100);
}

#[test]
fn walk_inputs_are_validated() {
    assert!(walk_sample_json("diagonal", 10, 1, "visit-count").is_err());
    assert!(walk_sample_json("free", 10, 1, "weird").is_err());
    assert!(walk_sample_json("free", 1_000_000, 1, "visit-count").is_err());
    assert!(walk_statistic_json("free", 1 << 20, 1, 1000, 1, "degree").is_err());
}

#[test]
fn walk_statistic_is_seed_deterministic() {
    let a = walk_statistic_json("free", 256, 1, 1000, 9, "degree").unwrap();
    let b = walk_statistic_json("free", 256, 1, 1000, 9, "degree").unwrap();
    assert_eq!(a, b);
    assert!(a["m2"].as_f64().unwrap() > 0.0);
}

#[test]
fn edge_curves_follow_the_gamma_shape() {
    let v = edge_curves_json(0, -40.0, -5.0, 3.0, 50, "").unwrap();
    let a = v["A"].as_f64().unwrap();
    let mu = v["mu"].as_f64().unwrap();
    let d = v["log_density"].as_array().unwrap();
    // ln f(x) − x/A − (μ−1) ln(−x/A) is constant.
    let shape = |p: &serde_json::Value| {
        let x = p[0].as_f64().unwrap();
        p[1].as_f64().unwrap() - x / a - (mu - 1.0) * (-x / a).ln()
    };
    let c0 = shape(&d[0]);
    assert!(d.iter().all(|p| (shape(p) - c0).abs() < 1e-9));
    let phi = v["phi_as"].as_array().unwrap();
    assert_eq!(phi.len(), 50);
    assert!(edge_curves_json(0, -4.0, 1.0, 3.0, 50, "").is_err());
}

#[test]
fn kernel_explorer_reports_borel_identity() {
    let v = kernel_explorer_json(1, 0.5, 0.0, 5.0, 2.0, 0.0, 2).unwrap();
    assert_eq!(v["kernel"].as_array().unwrap().len(), 200);
    assert!(v["borel"]["rel_diff"].as_f64().unwrap() < 1e-6);
    // Outside the sector the identity reports an error instead of a value.
    let v = kernel_explorer_json(1, 0.5, 0.0, 5.0, 0.2, 0.0, 2).unwrap();
    assert!(v["borel"]["error"].is_string());
}
