//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three explorers, each a pure function from parameters to a JSON string:
//!
//! * walks — sample one walk and its multiple-point range, or estimate the
//!   moments of the rescaled statistic over a small batch;
//! * edge — the rising-edge density and the asymptotic characteristic
//!   function along the real `t` axis;
//! * kernel — the modified Borel kernel along `b` and the Borel identity at a
//!   chosen `(s, R)`.
//!
//! The `*_json` functions are plain Rust (and tested natively); the
//! `#[wasm_bindgen]` wrappers only convert errors.

use num_complex::Complex64;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use phi4walk::edge::{self, LipatovConstants};
use phi4walk::transform;
use phi4walk::walk::{self, CountConvention, MultiplicityConvention, WalkKind};

/// Upper bounds that keep a single call interactive in the browser.
pub const MAX_DRAWN_STEPS: usize = 200_000;
pub const MAX_BATCH_WORK: usize = 20_000_000;
pub const MAX_POINTS: usize = 2_000;

type DemoResult = Result<Value, String>;

fn kind(s: &str) -> Result<WalkKind, String> {
    match s {
        "closed" => Ok(WalkKind::Closed),
        "free" => Ok(WalkKind::Free),
        _ => Err(format!("kind must be \"closed\" or \"free\", got {s:?}")),
    }
}

fn convention(multiplicity: &str) -> Result<CountConvention, String> {
    let multiplicity = match multiplicity {
        "visit-count" => MultiplicityConvention::VisitCount,
        "degree" => MultiplicityConvention::Degree,
        _ => return Err(format!("unknown multiplicity convention {multiplicity:?}")),
    };
    Ok(CountConvention {
        multiplicity,
        ..CountConvention::default()
    })
}

fn constants(text: &str) -> Result<LipatovConstants, String> {
    if text.trim().is_empty() {
        Ok(LipatovConstants::synthetic())
    } else {
        LipatovConstants::from_json(text).map_err(|e| e.to_string())
    }
}

fn grid(a: f64, b: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}"));
    }
    Ok((0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect())
}

/// One walk: lattice path, visit histogram and `k ↦ N_{2k}`.
pub fn walk_sample_json(kind_name: &str, n: usize, seed: u64, multiplicity: &str) -> DemoResult {
    let kind = kind(kind_name)?;
    if kind.length(n) > MAX_DRAWN_STEPS {
        return Err(format!("walk length is limited to {MAX_DRAWN_STEPS} steps in the demo"));
    }
    let conv = convention(multiplicity)?;
    let w = walk::sample_walk(kind, n, seed).map_err(|e| e.to_string())?;
    let hist = walk::visit_histogram(&w, conv.visits);
    let range: Vec<(usize, u64)> = walk::multiplicity_range(&w, conv).into_iter().collect();
    Ok(json!({
        "length": w.len(),
        "positions": w.positions(),
        "histogram": hist,
        "range": range,
    }))
}

/// Batch moments of the rescaled centred `N_{2k}`.
pub fn walk_statistic_json(
    kind_name: &str,
    n: usize,
    k: usize,
    batch: usize,
    seed: u64,
    multiplicity: &str,
) -> DemoResult {
    let kind = kind(kind_name)?;
    if kind.length(n).saturating_mul(batch) > MAX_BATCH_WORK {
        return Err(format!("length × batch is limited to {MAX_BATCH_WORK} in the demo"));
    }
    let conv = convention(multiplicity)?;
    let b = walk::beta_statistic(kind, n, k, batch, seed, conv).map_err(|e| e.to_string())?;
    serde_json::to_value(b).map_err(|e| e.to_string())
}

/// Edge density `f_i(x)` on `[x_min, x_max] ⊂ (−∞, 0)` and `Φ^as_i(t)` for
/// `t ∈ [0, t_max]`.  An empty constants string selects the synthetic set.
pub fn edge_curves_json(which: u8, x_min: f64, x_max: f64, t_max: f64, points: usize, constants_json: &str) -> DemoResult {
    let k = constants(constants_json)?;
    if !(x_max < 0.0) {
        return Err("the edge density lives on x < 0".into());
    }
    let density = grid(x_min, x_max, points)?
        .into_iter()
        .map(|x| Ok(json!([x, edge::edge_log_density(which, x, &k)?])))
        .collect::<phi4walk::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let phi = grid(0.0, t_max, points)?
        .into_iter()
        .map(|t| {
            let z = edge::phi_as(which, Complex64::new(t, 0.0), &k)?;
            Ok(json!([t, z.re, z.im]))
        })
        .collect::<phi4walk::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "A": k.a(),
        "mu": k.mu(which).map_err(|e| e.to_string())?,
        "log_density": density,
        "phi_as": phi,
    }))
}

/// `|ϑ_k(g, b)|` along `b ∈ (0, b_max]`, whether `g` lies in the convergence
/// region, and the Borel identity at `(s, R)`.
pub fn kernel_explorer_json(k: i32, g_re: f64, g_im: f64, b_max: f64, s_re: f64, s_im: f64, r: u32) -> DemoResult {
    let g = Complex64::new(g_re, g_im);
    let kernel = grid(b_max / MAX_POINTS as f64, b_max, 200)?
        .into_iter()
        .map(|b| json!([b, transform::theta_kernel(k, g, b).norm()]))
        .collect::<Vec<_>>();
    let s = Complex64::new(s_re, s_im);
    let borel = match transform::borel_identity(s, r, 0) {
        Ok(c) => json!({
            "lhs": [c.lhs.re, c.lhs.im],
            "rhs": [c.rhs.re, c.rhs.im],
            "rel_diff": c.rel_diff,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(json!({
        "z": [transform::z_of_g(g).re, transform::z_of_g(g).im],
        "in_region": transform::in_region(k, g),
        "kernel": kernel,
        "borel": borel,
    }))
}

fn to_js(r: DemoResult) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn walk_sample(kind: &str, n: usize, seed: u64, multiplicity: &str) -> Result<String, JsError> {
    to_js(walk_sample_json(kind, n, seed, multiplicity))
}

#[wasm_bindgen]
pub fn walk_statistic(kind: &str, n: usize, k: usize, batch: usize, seed: u64, multiplicity: &str) -> Result<String, JsError> {
    to_js(walk_statistic_json(kind, n, k, batch, seed, multiplicity))
}

#[wasm_bindgen]
pub fn edge_curves(which: u8, x_min: f64, x_max: f64, t_max: f64, points: usize, constants_json: &str) -> Result<String, JsError> {
    to_js(edge_curves_json(which, x_min, x_max, t_max, points, constants_json))
}

#[wasm_bindgen]
pub fn kernel_explorer(k: i32, g_re: f64, g_im: f64, b_max: f64, s_re: f64, s_im: f64, r: u32) -> Result<String, JsError> {
    to_js(kernel_explorer_json(k, g_re, g_im, b_max, s_re, s_im, r))
}
