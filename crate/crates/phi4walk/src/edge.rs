//! Rising-edge asymptotics: Lipatov-type constants, the Gauss hypergeometric
//! function, the asymptotic characteristic functions `Φ^as_0`, `Φ^as_2`, and
//! the Gamma-shaped densities they imply for `x → −∞`.
//!
//! `Φ^as` is evaluated through the regularized function
//! `₂F̃₁(a,b;c;z) = ₂F₁(a,b;c;z)/Γ(c)`, which is entire in `c` and removes
//! the apparent pole of `Φ^as_0` at `t = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::series::rgamma_shifted;
use crate::special::{gamma, gamma_real, rgamma, EULER_GAMMA};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Published numerical value of `1/(2πA)`.
pub const INV_2PI_A: f64 = 0.933_112_776_025;

/// Target relative accuracy of [`hyp2f1`].
pub const HYP2F1_TOLERANCE: f64 = 1e-9;

const MAX_TERMS: usize = 6000;

// ---------------------------------------------------------------------------
// Gauss hypergeometric function.

/// Which representation evaluates `₂F₁` at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hyp2f1Route {
    /// Gauss series in `z`.
    Series,
    /// Pfaff transformation, series in `z/(z−1)`.
    Pfaff,
    /// Connection formula around `z = 1`, series in `1 − z`.
    OneMinusZ,
    /// Connection formula around `∞`, series in `1/z`.
    Inverse,
    /// Connection formula around `∞`, series in `1/(1−z)`.
    InverseOneMinusZ,
}

impl Hyp2f1Route {
    pub const ALL: [Hyp2f1Route; 5] = [
        Hyp2f1Route::Series,
        Hyp2f1Route::Pfaff,
        Hyp2f1Route::OneMinusZ,
        Hyp2f1Route::Inverse,
        Hyp2f1Route::InverseOneMinusZ,
    ];

    /// Series variable used by the route.
    pub fn variable(self, z: Complex64) -> Complex64 {
        match self {
            Self::Series => z,
            Self::Pfaff => z / (z - 1.0),
            Self::OneMinusZ => 1.0 - z,
            Self::Inverse => z.inv(),
            Self::InverseOneMinusZ => (1.0 - z).inv(),
        }
    }
}

/// A hypergeometric value with its error estimate and the route used.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Hyp2f1Value {
    pub value: Complex64,
    pub err: f64,
    pub route: Hyp2f1Route,
}

fn near_integer(x: Complex64) -> bool {
    x.im.abs() < 1e-12 && (x.re - x.re.round()).abs() < 1e-12
}

/// `Σ_n (a)_n (b)_n / n! · w^n / Γ(c+n)` with an error estimate.
fn regularized_series(a: Complex64, b: Complex64, cc: Complex64, w: Complex64) -> Result<(Complex64, f64)> {
    // `p` is (a)_n (b)_n w^n / n!; it is only needed while 1/Γ(c+n) can
    // vanish, after which the term ratio is used (avoids overflow of `p`).
    let mut p = c(1.0, 0.0);
    let mut term = rgamma(cc);
    let mut sum = c(0.0, 0.0);
    let mut largest: f64 = 0.0;
    let mut small = 0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        sum += term;
        largest = largest.max(term.norm());
        if p.norm() == 0.0 {
            // (a)_n or (b)_n hit zero: the series terminates.
            return Ok((sum, f64::EPSILON * largest * (nf + 1.0)));
        }
        if term.norm() <= 1e-17 * sum.norm().max(1e-300) && nf > (cc.norm() + a.norm() + b.norm()) {
            small += 1;
            if small == 3 {
                let err = 4.0 * f64::EPSILON * largest * nf.sqrt() + term.norm();
                return Ok((sum, err));
            }
        } else {
            small = 0;
        }
        let step = (a + nf) * (b + nf) / (nf + 1.0) * w;
        let cn = cc + nf;
        if near_integer(cn) && cn.re <= 0.5 || term.norm() == 0.0 {
            p *= step;
            term = p * rgamma(cn + 1.0);
        } else {
            if p.norm() < 1e300 {
                p *= step;
            }
            term *= step / cn;
        }
        if !term.re.is_finite() || !term.im.is_finite() {
            break;
        }
    }
    Err(Error::Numerical {
        what: "hypergeometric series",
        detail: format!("no convergence at |w| = {}", w.norm()),
    })
}

/// `₂F̃₁(a,b;c;z) = ₂F₁(a,b;c;z)/Γ(c)` through a chosen route.
pub fn hyp2f1_regularized_via(
    route: Hyp2f1Route,
    a: Complex64,
    b: Complex64,
    cc: Complex64,
    z: Complex64,
) -> Result<Hyp2f1Value> {
    let w = route.variable(z);
    let (value, err) = match route {
        Hyp2f1Route::Series => regularized_series(a, b, cc, w)?,
        Hyp2f1Route::Pfaff => {
            let pre = (1.0 - z).powc(-a);
            let (v, e) = regularized_series(a, cc - b, cc, w)?;
            (pre * v, pre.norm() * e)
        }
        Hyp2f1Route::OneMinusZ => {
            let d = cc - a - b;
            if near_integer(d) {
                return domain("c − a − b is an integer; the 1−z connection formula is degenerate");
            }
            let s = PI / (PI * d).sin();
            let (v1, e1) = regularized_series(a, b, a + b - cc + 1.0, w)?;
            let (v2, e2) = regularized_series(cc - a, cc - b, d + 1.0, w)?;
            let f1 = s * rgamma(cc - a) * rgamma(cc - b);
            let f2 = s * w.powc(d) * rgamma(a) * rgamma(b);
            (f1 * v1 - f2 * v2, f1.norm() * e1 + f2.norm() * e2)
        }
        Hyp2f1Route::Inverse | Hyp2f1Route::InverseOneMinusZ => {
            let d = b - a;
            if near_integer(d) {
                return domain("b − a is an integer; the connection formula at ∞ is degenerate");
            }
            let t = PI / (PI * d).sin();
            let (base, p1, q1, p2, q2) = if route == Hyp2f1Route::Inverse {
                (-z, a - cc + 1.0, a - b + 1.0, b - cc + 1.0, b - a + 1.0)
            } else {
                (1.0 - z, cc - b, a - b + 1.0, cc - a, b - a + 1.0)
            };
            let (v1, e1) = regularized_series(a, p1, q1, w)?;
            let (v2, e2) = regularized_series(b, p2, q2, w)?;
            let f1 = t * rgamma(b) * rgamma(cc - a) * base.powc(-a);
            let f2 = t * rgamma(a) * rgamma(cc - b) * base.powc(-b);
            (f1 * v1 - f2 * v2, f1.norm() * e1 + f2.norm() * e2)
        }
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Numerical {
            what: "hypergeometric function",
            detail: format!("non-finite value via {route:?}"),
        });
    }
    Ok(Hyp2f1Value { value, err, route })
}

/// `₂F̃₁(a,b;c;z)`, choosing the non-degenerate route with the smallest
/// series variable (the plain series whenever `|z| ≤ 1/2`).
pub fn hyp2f1_regularized(a: Complex64, b: Complex64, cc: Complex64, z: Complex64) -> Result<Hyp2f1Value> {
    if z.im == 0.0 && z.re > 1.0 {
        return domain("z lies on the branch cut [1, ∞)");
    }
    if z.norm() <= 0.5 {
        return hyp2f1_regularized_via(Hyp2f1Route::Series, a, b, cc, z);
    }
    let mut routes: Vec<(f64, Hyp2f1Route)> = Hyp2f1Route::ALL
        .iter()
        .map(|&r| (r.variable(z).norm(), r))
        .filter(|(m, _)| m.is_finite())
        .collect();
    routes.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut last = None;
    for (_, r) in routes {
        match hyp2f1_regularized_via(r, a, b, cc, z) {
            Ok(v) => return Ok(v),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one route"))
}

/// Gauss hypergeometric function `₂F₁(a,b;c;z)`.
pub fn hyp2f1(a: Complex64, b: Complex64, cc: Complex64, z: Complex64) -> Result<Hyp2f1Value> {
    if near_integer(cc) && cc.re <= 0.0 {
        return domain("c is a nonpositive integer");
    }
    let r = hyp2f1_regularized(a, b, cc, z)?;
    let g = gamma(cc);
    Ok(Hyp2f1Value {
        value: r.value * g,
        err: r.err * g.norm(),
        route: r.route,
    })
}

// ---------------------------------------------------------------------------
// Constants.

/// Constants of the large-order behaviour in `d = 2`.  Only `I4` has a
/// default (back-solved from [`INV_2PI_A`]); the others must be supplied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipatovConstants {
    #[serde(rename = "I1")]
    pub i1: Option<f64>,
    #[serde(rename = "I4")]
    pub i4: f64,
    #[serde(rename = "I6")]
    pub i6: Option<f64>,
    #[serde(rename = "DL")]
    pub dl: Option<f64>,
    #[serde(rename = "DT")]
    pub dt: Option<f64>,
    /// Where the numbers came from.
    #[serde(default)]
    pub provenance: String,
}

impl Default for LipatovConstants {
    fn default() -> Self {
        Self {
            i1: None,
            i4: 8.0 * PI * INV_2PI_A,
            i6: None,
            dl: None,
            dt: None,
            provenance: "I4 back-solved from 1/(2πA) = 0.933112776025; I1, I6, DL, DT must be supplied".into(),
        }
    }
}

fn need(name: &'static str, v: Option<f64>) -> Result<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => domain(format!("constant {name} must be positive, got {x}")),
        None => domain(format!("constant {name} is not set")),
    }
}

impl LipatovConstants {
    /// Arbitrary positive values for exercising code paths.  They are NOT
    /// physical constants; results computed with them carry no meaning
    /// beyond internal consistency.
    pub fn synthetic() -> Self {
        Self {
            i1: Some(1.7),
            i6: Some(41.0),
            dl: Some(1.3),
            dt: Some(0.8),
            provenance: "synthetic placeholders (not physical)".into(),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Checks positivity of the set values and `1/(2πA) < 3/2`.
    pub fn validate(&self) -> Result<()> {
        if !(self.i4 > 0.0 && self.i4.is_finite()) {
            return domain(format!("I4 must be positive, got {}", self.i4));
        }
        for (name, v) in [("I1", self.i1), ("I6", self.i6), ("DL", self.dl), ("DT", self.dt)] {
            if v.is_some() {
                need(name, v)?;
            }
        }
        if self.inv_2pi_a() >= 1.5 {
            return domain(format!("1/(2πA) = {} must be below 3/2", self.inv_2pi_a()));
        }
        Ok(())
    }

    /// `A = 4/I4`.
    pub fn a(&self) -> f64 {
        4.0 / self.i4
    }

    /// `1/(2πA)`.
    pub fn inv_2pi_a(&self) -> f64 {
        1.0 / (2.0 * PI * self.a())
    }

    /// `μ_0 = 5/2 − 1/(2πA)`.
    pub fn mu0(&self) -> f64 {
        2.5 - self.inv_2pi_a()
    }

    /// `μ_2 = 3/2 − 1/(2πA)`.
    pub fn mu2(&self) -> f64 {
        1.5 - self.inv_2pi_a()
    }

    pub fn mu(&self, which: u8) -> Result<f64> {
        match which {
            0 => Ok(self.mu0()),
            2 => Ok(self.mu2()),
            _ => domain(format!("which must be 0 or 2, got {which}")),
        }
    }

    /// `ξ_M(N,d) = 2^{N−1}/(2π)^{(N+d+1)/2} · ((I6−I4)/d)^{d/2} ·
    /// (4/I4)^{(M+d)/2} · DL^{−1/2} · DT^{−(N−1)/2}`.
    pub fn xi(&self, m: u32, n: u32, d: u32) -> Result<f64> {
        let i6 = need("I6", self.i6)?;
        let dl = need("DL", self.dl)?;
        let dt = need("DT", self.dt)?;
        if i6 <= self.i4 {
            return domain("ξ needs I6 > I4");
        }
        let (m, n, d) = (f64::from(m), f64::from(n), f64::from(d));
        Ok(2f64.powf(n - 1.0) / (2.0 * PI).powf((n + d + 1.0) / 2.0)
            * ((i6 - self.i4) / d).powf(d / 2.0)
            * (4.0 / self.i4).powf((m + d) / 2.0)
            * dl.powf(-0.5)
            * dt.powf(-(n - 1.0) / 2.0))
    }

    /// `ξ_0 = ξ_0(N=0, d=2)`.
    pub fn xi0(&self) -> Result<f64> {
        self.xi(0, 0, 2)
    }

    /// `ξ_2 = ξ_2(N=0, d=2)`.
    pub fn xi2(&self) -> Result<f64> {
        self.xi(2, 0, 2)
    }
}

// ---------------------------------------------------------------------------
// Asymptotic characteristic functions and densities.

/// `Φ^as_0(t) = 8π ξ_0 Γ(3/2)/Γ(−it/2π) e^{iγt/2π} ₂F₁(1, 3/2; −it/2π; −4it/I4)`
/// or `Φ^as_2(t) = ξ_2 I1² Γ(5/2)/Γ(2−it/2π) e^{i(γ−1)t/2π}
/// ₂F₁(1, 5/2; 2−it/2π; −4it/I4)`, for complex `t` off the cut.
pub fn phi_as(which: u8, t: Complex64, k: &LipatovConstants) -> Result<Complex64> {
    let it = c(0.0, 1.0) * t;
    let z = -4.0 * it / k.i4;
    match which {
        0 => {
            let pre = 8.0 * PI * k.xi0()? * gamma_real(1.5);
            let f = hyp2f1_regularized(c(1.0, 0.0), c(1.5, 0.0), -it / (2.0 * PI), z)?;
            Ok(pre * (EULER_GAMMA * it / (2.0 * PI)).exp() * f.value)
        }
        2 => {
            let i1 = need("I1", k.i1)?;
            let pre = k.xi2()? * i1 * i1 * gamma_real(2.5);
            let f = hyp2f1_regularized(c(1.0, 0.0), c(2.5, 0.0), 2.0 - it / (2.0 * PI), z)?;
            Ok(pre * ((EULER_GAMMA - 1.0) * it / (2.0 * PI)).exp() * f.value)
        }
        _ => domain(format!("which must be 0 or 2, got {which}")),
    }
}

/// Prefactor `K` of `f(x) ≈ K (−x/A)^{μ−1} e^{x/A}`.
pub fn edge_prefactor(which: u8, k: &LipatovConstants) -> Result<f64> {
    let a = k.a();
    match which {
        0 => Ok((-EULER_GAMMA * k.inv_2pi_a()).exp() * 8.0 * PI * k.xi0()? / a),
        2 => {
            let i1 = need("I1", k.i1)?;
            Ok(((1.0 - EULER_GAMMA) * k.inv_2pi_a()).exp() * i1 * i1 * k.xi2()? / a)
        }
        _ => domain(format!("which must be 0 or 2, got {which}")),
    }
}

/// `ln f_which(x)` of the rising-edge density, `x < 0`.
pub fn edge_log_density(which: u8, x: f64, k: &LipatovConstants) -> Result<f64> {
    if !(x < 0.0) {
        return domain(format!("edge density needs x < 0, got {x}"));
    }
    let a = k.a();
    let mu = k.mu(which)?;
    Ok(edge_prefactor(which, k)?.ln() + (mu - 1.0) * (-x / a).ln() + x / a)
}

/// Rising-edge density `f_which(x)`, `x < 0`.
pub fn edge_density(which: u8, x: f64, k: &LipatovConstants) -> Result<f64> {
    Ok(edge_log_density(which, x, k)?.exp())
}

/// `ln f(x) − x/A − (μ−1) ln(−x/A)`; constant in `x`.
pub fn edge_shape_residual(which: u8, x: f64, k: &LipatovConstants) -> Result<f64> {
    let a = k.a();
    let mu = k.mu(which)?;
    Ok(edge_log_density(which, x, k)? - x / a - (mu - 1.0) * (-x / a).ln())
}

/// Behaviour of `Φ^as` at its nearest singularity `t = i/A`.
#[derive(Clone, Debug, Serialize)]
pub struct SingularityCheck {
    pub which: u8,
    /// `1 − Aτ` at `t = iτ`.
    pub eps: f64,
    /// `Φ^as(iτ) · (1 − Aτ)^μ`.
    pub observed: Complex64,
    /// `K · A · Γ(μ)`, the transform of the Gamma-shaped edge density.
    pub predicted: f64,
    pub rel_diff: f64,
}

/// Compares `Φ^as(iτ)(1 − Aτ)^μ` with the limit implied by the edge density:
/// `∫_{−∞}^0 e^{itx} K(−x/A)^{μ−1} e^{x/A} dx = K A Γ(μ) (1 + iAt)^{−μ}`.
pub fn singularity_check(which: u8, eps: f64, k: &LipatovConstants) -> Result<SingularityCheck> {
    let a = k.a();
    let mu = k.mu(which)?;
    let tau = (1.0 - eps) / a;
    let observed = phi_as(which, c(0.0, tau), k)? * eps.powf(mu);
    let predicted = edge_prefactor(which, k)? * a * gamma_real(mu);
    Ok(SingularityCheck {
        which,
        eps,
        observed,
        predicted,
        rel_diff: (observed - predicted).norm() / predicted.abs(),
    })
}

/// Taylor coefficients `[t^j] f` for `j ≤ max_order` from the trapezoidal rule
/// on the circle `|t| = radius` with `n_points` nodes.
pub fn taylor_coefficients<F: Fn(Complex64) -> Result<Complex64>>(
    f: F,
    radius: f64,
    n_points: usize,
    max_order: usize,
) -> Result<Vec<Complex64>> {
    let vals = (0..n_points)
        .map(|j| f(Complex64::from_polar(radius, 2.0 * PI * j as f64 / n_points as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..=max_order)
        .map(|k| {
            let s: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n_points as f64))
                .sum();
            s / (n_points as f64 * radius.powi(k as i32))
        })
        .collect())
}

/// One step of the large-order ratio test.
#[derive(Clone, Debug, Serialize)]
pub struct RatioCheck {
    pub r: usize,
    /// `P_{r+1}/P_r` of the implied perturbative coefficients.
    pub observed: f64,
    /// `L_{r+1}/L_r` with `L_r = Γ(r + 1/2)(4/I4)^r` (which 0) or
    /// `Γ(r + 3/2)(4/I4)^r` (which 2).
    pub lipatov: f64,
    pub rel_diff: f64,
    pub pass: bool,
}

/// Allowed relative deviation in the ratio test.
pub const RATIO_TOLERANCE: f64 = 0.1;

/// Coefficients `X_n` of the expansion of the reduced `Φ^as` in the basis
/// `t^n/Γ(n + s0 − it/2π)` (`s0 = 0` for which 0, `s0 = 2` for which 2), for
/// `n ≤ max_n`, from Cauchy Taylor coefficients and a triangular solve.
pub fn basis_coefficients(which: u8, k: &LipatovConstants, max_n: usize) -> Result<Vec<Complex64>> {
    let (phase, s0, first) = match which {
        0 => (-EULER_GAMMA, 0u32, 1usize),
        2 => (1.0 - EULER_GAMMA, 2u32, 0usize),
        _ => return domain(format!("which must be 0 or 2, got {which}")),
    };
    let radius = k.i4 / 8.0;
    let taylor = taylor_coefficients(
        |t| Ok(phi_as(which, t, k)? * (c(0.0, phase) * t / (2.0 * PI)).exp()),
        radius,
        256,
        max_n,
    )?;
    let mut x = vec![c(0.0, 0.0); max_n + 1];
    let bases: Vec<Vec<Complex64>> = (0..=max_n)
        .map(|n| {
            if n < first {
                Vec::new()
            } else {
                rgamma_shifted(n as u32 + s0, max_n)
            }
        })
        .collect();
    for j in first..=max_n {
        let mut rest = taylor[j];
        for n in first..j {
            rest -= x[n] * bases[n][j - n];
        }
        x[j] = rest / bases[j][0];
    }
    Ok(x)
}

/// Ratio test of the implied perturbative coefficients against Lipatov growth
/// for `r ∈ r_range`.
pub fn lipatov_ratio_test(which: u8, k: &LipatovConstants, r_range: std::ops::RangeInclusive<usize>) -> Result<Vec<RatioCheck>> {
    let max_n = *r_range.end() + 1;
    let x = basis_coefficients(which, k, max_n)?;
    let weight = |n: usize| match which {
        0 => 4.0 * PI * (n as f64 - 1.0),
        _ => n as f64 + 1.0,
    };
    let shift = if which == 0 { 0.5 } else { 1.5 };
    Ok(r_range
        .map(|r| {
            let p = |n: usize| x[n].norm() / weight(n);
            let observed = p(r + 1) / p(r);
            let lipatov = (r as f64 + shift) * 4.0 / k.i4;
            let rel_diff = (observed / lipatov - 1.0).abs();
            RatioCheck {
                r,
                observed,
                lipatov,
                rel_diff,
                pass: rel_diff <= RATIO_TOLERANCE,
            }
        })
        .collect())
}

/// `|X_r / X_{r+1}|` for the characteristic-function coefficients of a
/// perturbative table — an estimate of the convergence radius `I4/4`
/// (reported, not asserted).
pub fn radius_trend(coeffs: &[Complex64]) -> Vec<f64> {
    coeffs
        .windows(2)
        .filter(|w| w[1].norm() > 0.0 && w[0].norm() > 0.0)
        .map(|w| w[0].norm() / w[1].norm())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hyp2f1_known_values() {
        let one = c(1.0, 0.0);
        let v = hyp2f1(one, c(1.5, 0.0), c(0.7, 0.2), c(0.0, 0.0)).unwrap();
        assert!((v.value - 1.0).norm() < 1e-15);
        let z = 0.3;
        let v = hyp2f1(one, one, c(2.0, 0.0), c(z, 0.0)).unwrap();
        assert_relative_eq!(v.value.re, -(1.0 - z).ln() / z, max_relative = 1e-13);
        // ₂F₁(1/2, 1; 3/2; −x²) = atan(x)/x, outside the unit disc.
        let x: f64 = 3.0;
        let v = hyp2f1(c(0.5, 0.0), one, c(1.5, 0.0), c(-x * x, 0.0)).unwrap();
        assert_relative_eq!(v.value.re, x.atan() / x, max_relative = 1e-12);
        assert!(hyp2f1(one, one, c(-2.0, 0.0), c(0.1, 0.0)).is_err());
    }

    #[test]
    fn hyp2f1_routes_agree() {
        let (a, b, cc) = (c(1.0, 0.0), c(1.5, 0.0), c(0.4, -0.3));
        for z in [c(0.49, 0.01), c(0.49, -0.01)] {
            let base = hyp2f1_regularized_via(Hyp2f1Route::Series, a, b, cc, z).unwrap().value;
            for r in [Hyp2f1Route::Pfaff, Hyp2f1Route::OneMinusZ] {
                let v = hyp2f1_regularized_via(r, a, b, cc, z).unwrap().value;
                assert!((v - base).norm() < 1e-10 * base.norm(), "{r:?}");
            }
        }
        for z in [c(-2.0, 1.0), c(0.0, 3.0), c(-5.0, -0.5)] {
            let base = hyp2f1_regularized_via(Hyp2f1Route::Inverse, a, b, cc, z).unwrap().value;
            for r in [Hyp2f1Route::InverseOneMinusZ, Hyp2f1Route::Pfaff] {
                let v = hyp2f1_regularized_via(r, a, b, cc, z).unwrap().value;
                assert!((v - base).norm() < 1e-9 * base.norm(), "{r:?} at {z}");
            }
        }
    }

    #[test]
    fn constants_from_published_value() {
        let k = LipatovConstants::default();
        assert!((k.inv_2pi_a() - INV_2PI_A).abs() < 1e-12);
        assert!((k.mu0() - 1.566_887_223_975).abs() < 1e-12);
        assert!(k.xi0().is_err());
        let s = LipatovConstants::synthetic();
        let ratio = s.xi(2, 0, 2).unwrap() / s.xi(0, 0, 2).unwrap();
        assert_relative_eq!(ratio, 4.0 / s.i4, max_relative = 1e-14);
        let json = r#"{"I1": 1.0, "I4": 23.45, "I6": 30.0, "DL": 1.0, "DT": 1.0}"#;
        assert!(LipatovConstants::from_json(json).is_ok());
        assert!(LipatovConstants::from_json(r#"{"I4": -1.0, "I1": null, "I6": null, "DL": null, "DT": null}"#).is_err());
    }

    #[test]
    fn phi_as_small_t() {
        let k = LipatovConstants::synthetic();
        let xi0 = k.xi0().unwrap();
        // Φ^as_0(t)/t → −i · 8π ξ0 Γ(3/2) (1/2π + 6/I4)
        let t = 1e-7;
        let v = phi_as(0, c(t, 0.0), &k).unwrap() / t;
        let expect = c(0.0, -1.0) * 8.0 * PI * xi0 * gamma_real(1.5) * (1.0 / (2.0 * PI) + 6.0 / k.i4);
        assert!((v - expect).norm() < 1e-5 * expect.norm());
        // Φ^as_2(0) = ξ2 I1² Γ(5/2)
        let v2 = phi_as(2, c(0.0, 0.0), &k).unwrap();
        assert_relative_eq!(v2.re, k.xi2().unwrap() * 1.7 * 1.7 * gamma_real(2.5), max_relative = 1e-14);
    }

    #[test]
    fn density_shape_and_singularity() {
        let k = LipatovConstants::synthetic();
        for which in [0u8, 2] {
            let r0 = edge_shape_residual(which, -5.0 * k.a(), &k).unwrap();
            let r1 = edge_shape_residual(which, -20.0 * k.a(), &k).unwrap();
            assert!((r0 - r1).abs() < 1e-12);
            let far = singularity_check(which, 1e-6, &k).unwrap();
            let near = singularity_check(which, 1e-2, &k).unwrap();
            assert!(far.rel_diff < 1e-2 && far.rel_diff < near.rel_diff, "{far:?} {near:?}");
        }
    }

    #[test]
    fn ratio_test() {
        let k = LipatovConstants::synthetic();
        for which in [0u8, 2] {
            for chk in lipatov_ratio_test(which, &k, 8..=12).unwrap() {
                assert!(chk.pass, "{chk:?}");
            }
        }
    }
}
