//! The acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL` line.  Every check returned by the library is
//! re-judged here against tolerances pinned in this file, so a loosened
//! library constant cannot make a criterion pass.

mod common;

use std::sync::OnceLock;

use phi4walk::feynman::{GammaCache, McConfig};
use phi4walk::graph::balanced_matrices;
use phi4walk::series::CoefficientTable;
use phi4walk::verify::{self, CheckResult, VerifyConfig};
use phi4walk::{edge, transform};

// Pinned tolerances.
const SIGMA_DIV_SUM: f64 = 3.0;
const DIV_SUM_REL_STDERR: f64 = 1e-3;
const BOREL_REL: f64 = 1e-6;
const BOREL_POINTS: usize = 12;
const SLOPE_TOL: f64 = 0.2;
const SIGMA_CLOSURE: f64 = 3.0;
const ANCHOR_ABS: f64 = 1e-12;
const SIGMA_REALITY: f64 = 3.0;
const REALITY_ROUNDING: f64 = 1e-12;
const INV_2PI_A_ABS: f64 = 1e-12;
const INV_2PI_A_PUBLISHED: f64 = 0.933112776025;
const MU0_PUBLISHED: f64 = 1.566887223975;
const MU0_ULPS: f64 = 4.0;
const SHAPE_SPREAD: f64 = 1e-12;
const CHI2_MIN_P: f64 = 1e-3;
const CHI2_SAMPLES: usize = 1_000_000;
const CHI2_MAX_N: usize = 3;
const ORACLE_WALKS: usize = 10_000;
const OVERLAP_N: usize = 1 << 16;
const OVERLAP_SIGMAS: f64 = 2.0;
const THIRD_N: usize = 1 << 18;

fn value(c: &CheckResult, key: &str) -> f64 {
    *c.values
        .get(key)
        .unwrap_or_else(|| panic!("check {:?} has no value {key:?}", c.name))
}

/// Prints the criterion line and fails the test if any sub-check fails the
/// pinned judgement.
fn conclude(criterion: u8, checks: &[CheckResult], judge: impl Fn(&CheckResult) -> bool) {
    assert!(!checks.is_empty(), "criterion {criterion}: no checks were run");
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !judge(c))
        .map(|c| match c.sigma {
            Some(s) => format!("{} ({s:.2}σ)", c.name),
            None => c.name.clone(),
        })
        .collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "criterion {criterion}: {verdict} ({}/{} checks){}",
        checks.len() - failed.len(),
        checks.len(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    assert!(failed.is_empty(), "criterion {criterion} failed: {failed:?}");
}

fn table() -> &'static CoefficientTable {
    static TABLE: OnceLock<CoefficientTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cfg = VerifyConfig::default();
        let mut cache = GammaCache::new(cfg.mc());
        CoefficientTable::compute(cfg.order, &mut cache).expect("coefficient table")
    })
}

#[test]
fn criterion_01_weight_oracles() {
    let checks = verify::check_weights().unwrap();
    // MF(r,0,2) for r = 2..=4 and MF(r,1,2) for r = 2..=3.
    assert_eq!(checks.len(), 5);
    conclude(1, &checks, |c| value(c, "mismatches") == 0.0 && value(c, "matrices") > 0.0);
}

#[test]
fn criterion_02_a1_closed_form() {
    let checks = verify::check_a1().unwrap();
    assert_eq!(checks.len(), 3);
    conclude(2, &checks, |c| value(c, "mismatches") == 0.0 && value(c, "matrices") > 0.0);
}

#[test]
fn criterion_03_euler_counting() {
    let mut checks = verify::check_euler().unwrap();
    // Independent recount on every balanced matrix with at most six arcs.
    let mut oracle = CheckResult {
        criterion: Some(3),
        name: "euler count vs arc-sequence oracle".into(),
        values: Default::default(),
        sigma: None,
        pass: true,
    };
    let (mut total, mut mismatches) = (0u64, 0u64);
    for q in 2..=6 {
        for f in balanced_matrices(q, 6) {
            total += 1;
            let lib = phi4walk::graph::euler_count(&f).unwrap();
            if lib != common::euler_circuits_oracle(&f).into() {
                mismatches += 1;
            }
        }
    }
    oracle.values.insert("matrices".into(), total as f64);
    oracle.values.insert("mismatches".into(), mismatches as f64);
    checks.push(oracle);
    conclude(3, &checks, |c| {
        value(c, "mismatches") == 0.0
            && value(c, "matrices") > 0.0
            && c.values.get("disconnected_nonzero").map_or(true, |&v| v == 0.0)
            && c.values.get("disconnected").map_or(true, |&v| v > 0.0)
    });
}

#[test]
fn criterion_04_subdivision_sum_rule() {
    let mut cache = GammaCache::new(McConfig::default());
    let checks = verify::check_div_sum(&mut cache).unwrap();
    assert!(checks.len() >= 2, "expected graphs at r = 2 and r = 3");
    conclude(4, &checks, |c| {
        let combined = value(c, "lhs_err").hypot(value(c, "rhs_err"));
        (value(c, "lhs") - value(c, "rhs")).abs() <= SIGMA_DIV_SUM * combined
            && value(c, "max_rel_stderr") <= DIV_SUM_REL_STDERR
    });
}

#[test]
fn criterion_05_borel_identity() {
    let checks = verify::check_borel().unwrap();
    assert_eq!(checks.len(), BOREL_POINTS);
    for (s, _) in transform::borel_grid() {
        assert!(transform::in_half_region(s, 0.0), "grid point {s} outside the sector");
    }
    conclude(5, &checks, |c| value(c, "rel_diff") <= BOREL_REL);
}

#[test]
fn criterion_06_asymptotic_scaling() {
    let checks = verify::check_scaling().unwrap();
    let expected = [-(0.0 + 1.0 + 2.0), -(0.0 + 2.0 + 2.0), -(1.0 + 1.0 + 2.0)];
    assert_eq!(checks.len(), expected.len());
    for (c, e) in checks.iter().zip(expected) {
        assert_eq!(value(c, "expected"), e);
    }
    conclude(6, &checks, |c| (value(c, "slope") - value(c, "expected")).abs() <= SLOPE_TOL);
}

#[test]
fn criterion_07_zeta_closure() {
    let t = table();
    let mut checks = verify::check_closure(t).unwrap();
    // Independent value of the lowest free-energy coefficient.
    let banana = common::banana_coefficient();
    let g2 = t.gamma0[2];
    checks.push(CheckResult {
        criterion: Some(7),
        name: "lowest free-energy coefficient vs Bessel moment".into(),
        values: [("value".to_string(), g2.value), ("oracle".to_string(), banana)].into(),
        sigma: Some((g2.value - banana).abs() / g2.stderr),
        pass: true,
    });
    conclude(7, &checks, |c| {
        if c.name.contains("anchor") {
            value(c, "abs_diff") <= ANCHOR_ABS
        } else {
            c.sigma.is_some_and(|s| s <= SIGMA_CLOSURE)
        }
    });
}

#[test]
fn criterion_08_moment_reality() {
    let checks = verify::check_moments(table()).unwrap();
    // j = 0..=4 for each of the two statistics.
    assert_eq!(checks.len(), 10);
    conclude(8, &checks, |c| {
        let sig = value(c, "stderr").hypot(REALITY_ROUNDING * value(c, "re").abs().max(1.0));
        value(c, "im").abs() <= SIGMA_REALITY * sig
    });
}

#[test]
fn criterion_09_edge_constants() {
    let checks = verify::check_edge().unwrap();
    let k = edge::LipatovConstants::default();
    assert!((MU0_PUBLISHED - (2.5 - INV_2PI_A_PUBLISHED)).abs() < 1e-15);
    let primary: Vec<CheckResult> = checks.into_iter().filter(|c| c.criterion == Some(9)).collect();
    assert_eq!(primary.len(), 4);
    conclude(9, &primary, |c| {
        if c.name.contains("1/(2piA)") {
            (k.inv_2pi_a() - INV_2PI_A_PUBLISHED).abs() <= INV_2PI_A_ABS
        } else if c.name.contains("mu0") {
            (value(c, "mu0") - MU0_PUBLISHED).abs() <= MU0_ULPS * f64::EPSILON * MU0_PUBLISHED
        } else {
            value(c, "spread") <= SHAPE_SPREAD
        }
    });
}

#[test]
fn criterion_10_walk_properties() {
    let cfg = VerifyConfig::default();
    assert_eq!(cfg.walk.chi2_samples, CHI2_SAMPLES);
    assert_eq!(cfg.walk.chi2_max_n, CHI2_MAX_N);
    assert_eq!(cfg.walk.oracle_walks, ORACLE_WALKS);
    assert_eq!(cfg.walk.overlap_n, OVERLAP_N);
    assert_eq!(cfg.walk.third_n, THIRD_N);
    let checks = verify::check_walks(&cfg, table()).unwrap();
    for c in checks.iter().filter(|c| c.name.contains("uniformity")) {
        let n = c.name.rsplit('=').next().unwrap().parse::<u64>().unwrap();
        assert_eq!(value(c, "cells"), common::closed_walk_count(n) as f64);
    }
    conclude(10, &checks, |c| {
        if c.name.contains("uniformity") {
            value(c, "p_value") > CHI2_MIN_P
        } else if c.name.contains("oracle") {
            value(c, "mismatches") == 0.0 && value(c, "walks") == ORACLE_WALKS as f64
        } else if c.name.contains("k-overlap") {
            (value(c, "m2_k1") - value(c, "m2_k2")).abs()
                <= OVERLAP_SIGMAS * (value(c, "m2_k1_err") + value(c, "m2_k2_err"))
        } else {
            value(c, "m3_walk").signum() == value(c, "m3_series").signum()
        }
    });
}

#[test]
fn criterion_11_determinism() {
    // The quick preset runs every check; determinism does not depend on the
    // statistical power of the walk batches.
    let cfg = VerifyConfig::quick();
    let a = verify::run(&cfg).unwrap().to_json();
    let b = verify::run(&cfg).unwrap().to_json();
    let check = CheckResult {
        criterion: Some(11),
        name: "verify-all twice".into(),
        values: [("bytes".to_string(), a.len() as f64)].into(),
        sigma: None,
        pass: true,
    };
    let identical = a.as_bytes() == b.as_bytes();
    conclude(11, &[check], |_| identical);
}

/// Regression pins for the seed-7, order-4 coefficient table and the moments
/// derived from it (values produced by this implementation; the
/// independently checkable one, the `r = 2` free-energy coefficient, is
/// cross-checked against its Bessel-moment value in criterion 7).
#[test]
fn frozen_coefficient_table() {
    const REL: f64 = 1e-9;
    let t = table();
    let gamma0 = [
        (0.004237368993183318, 4.0409010492946205e-6),
        (0.0007717526024006731, 7.355527535318096e-7),
        (0.00045960757180776184, 2.895948292152391e-7),
    ];
    let gc = [
        (0.05942251392512464, 5.672024048427851e-5),
        (0.023671856023124924, 2.2578693665817142e-5),
        (0.023636689203339785, 1.0638586846496e-5),
    ];
    let close = |a: f64, b: f64| (a - b).abs() <= REL * b.abs();
    for r in 2..=4 {
        let (v, e) = gamma0[r - 2];
        assert!(close(t.gamma0[r].value, v) && close(t.gamma0[r].stderr, e), "gamma0 r={r}: {:?}", t.gamma0[r]);
        let (v, e) = gc[r - 2];
        assert!(close(t.gc[r].value, v) && close(t.gc[r].stderr, e), "gc r={r}: {:?}", t.gc[r]);
    }
    let moments: [(u8, [f64; 3]); 2] = [
        (0, [0.06483003172960444, -0.017032392328707614, 0.020529608315308534]),
        (2, [0.043086143169042405, -0.01013228824659446, 0.010093996431621035]),
    ];
    for (which, expect) in moments {
        let m = t.moments(which).unwrap();
        assert_eq!(m[0].re, 1.0);
        for j in 2..=4 {
            assert!(close(m[j].re, expect[j - 2]), "E(nu{which}^{j}) = {}", m[j].re);
        }
    }
}
