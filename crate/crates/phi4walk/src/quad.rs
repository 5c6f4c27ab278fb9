//! Quadrature: adaptive Gauss–Kronrod (7/15) for complex integrands on finite
//! and semi-infinite intervals, and Gauss–Legendre rules on `[0, 1]`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::Serialize;

/// Integration method tag carried by a [`QuadratureResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GaussKronrod,
    GaussLegendreTensor,
    StratifiedMonteCarlo,
    PositionSpaceMonteCarlo,
    Closed,
}

/// Value of a numeric integral with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    /// Standard error (Monte Carlo) or error estimate (deterministic rules).
    pub stderr: f64,
    /// Number of integrand evaluations.
    pub n_eval: u64,
    pub method: Method,
    /// Whether the requested tolerance was reached within budget.
    pub converged: bool,
}

impl QuadratureResult {
    /// Real part of the value (for integrals known to be real).
    pub fn re(&self) -> f64 {
        self.value.re
    }

    /// Relative standard error `stderr / |value|`.
    pub fn rel_err(&self) -> f64 {
        self.stderr / self.value.norm()
    }
}

/// Tolerances for the adaptive rules.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of interval bisections per finite integral.
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-14,
            rel: 1e-11,
            max_subdivisions: 2000,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: `(kronrod, |kronrod − gauss|)`.
fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss–Kronrod integral of a complex function over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> QuadratureResult {
    let mut panels = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    let mut n_eval = 15u64;
    let mut converged = false;
    for _ in 0..tol.max_subdivisions {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol.abs.max(tol.rel * total.norm()) {
            converged = true;
            break;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one panel");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            break;
        }
        let (v1, e1) = gk15(&mut f, pa, mid);
        let (v2, e2) = gk15(&mut f, mid, pb);
        n_eval += 30;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    let total: Complex64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    if !converged {
        converged = err <= tol.abs.max(tol.rel * total.norm());
    }
    QuadratureResult {
        value: total,
        stderr: err,
        n_eval,
        method: Method::GaussKronrod,
        converged,
    }
}

/// Integral over `[a, ∞)` by marching over geometrically growing intervals
/// `[a + c(2^k − 1), a + c(2^{k+1} − 1)]` until three consecutive interval
/// contributions fall below the tolerance.
pub fn integrate_to_infinity<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> QuadratureResult {
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut n_eval = 0;
    let mut converged = true;
    let mut small = 0;
    let mut lo = a;
    let mut width = scale;
    for _ in 0..80 {
        let hi = lo + width;
        let piece = integrate(&mut f, lo, hi, tol);
        total += piece.value;
        err += piece.stderr;
        n_eval += piece.n_eval;
        converged &= piece.converged;
        let threshold = tol.abs.max(tol.rel * total.norm()) * 1e-2;
        if piece.value.norm() <= threshold {
            small += 1;
            if small == 3 {
                return QuadratureResult {
                    value: total,
                    stderr: err,
                    n_eval,
                    method: Method::GaussKronrod,
                    converged,
                };
            }
        } else {
            small = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    QuadratureResult {
        value: total,
        stderr: err,
        n_eval,
        method: Method::GaussKronrod,
        converged: false,
    }
}

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("rule degree must be positive"));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finite_integrals() {
        let r = integrate(|x| Complex64::new(x.sin(), x.cos()), 0.0, 1.0, Tolerance::default());
        assert!(r.converged);
        assert_relative_eq!(r.value.re, 1.0 - 1f64.cos(), max_relative = 1e-13);
        assert_relative_eq!(r.value.im, 1f64.sin(), max_relative = 1e-13);
        // Endpoint singularity 1/√x.
        let s = integrate(|x| Complex64::new(x.powf(-0.5), 0.0), 0.0, 1.0, Tolerance::default());
        assert_relative_eq!(s.value.re, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn semi_infinite_integral() {
        // ∫_0^∞ e^{−(1+i)x} dx = 1/(1+i)
        let r = integrate_to_infinity(|x| (-Complex64::new(1.0, 1.0) * x).exp(), 0.0, 1.0, Tolerance::default());
        let expect = Complex64::new(1.0, 1.0).inv();
        assert!((r.value - expect).norm() < 1e-12);
    }

    #[test]
    fn gauss_legendre_unit_interval() {
        let rule = gauss_legendre_01(10);
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(7)).sum();
        assert_relative_eq!(s, 0.125, max_relative = 1e-14);
    }
}
