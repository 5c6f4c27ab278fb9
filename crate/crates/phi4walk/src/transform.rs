//! Modified Borel kernels and the integral transforms that turn the
//! characteristic-function series into asymptotic series in the coupling.
//!
//! Notation: `h(t,s) = exp(−ts − (it/2π) Log(ts))`, `μ(s) = 1 + i/(2πs)`,
//! `u = 1/s`, and `g = i/s`.  The central identity is
//!
//! ```text
//! ∫_0^∞ h(b,s) b^{R−1} / Γ(R − ib/2π) db = 1 / (s^R μ(s)),
//! ```
//!
//! valid for `Re s − arg(s)/2π > 1/2`, together with its images under
//! `(−μ^{−1} ∂_s)^p`, which raise the power of `b` by `p`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_to_infinity, QuadratureResult, Tolerance};
use crate::series::{CoefficientTable, CouplingSeries, SeriesVar};
use crate::special::{binomial_f64, factorial_f64, gamma_derivatives, rgamma, EULER_GAMMA};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sector margin used for the identity grid: `|arg s| < π/2 − 0.3`.
pub const SECTOR_MARGIN: f64 = 0.3;
/// Relative tolerance of the Borel identity check.
pub const BOREL_TOLERANCE: f64 = 1e-6;
/// Allowed deviation of a fitted truncation-error slope.
pub const SLOPE_TOLERANCE: f64 = 0.2;

/// Tight quadrature settings for the transform integrals.
pub fn transform_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-22,
        rel: 1e-12,
        max_subdivisions: 4000,
    }
}

/// `z(g) = −1/4 + i/g − i Log(g)/2π`.
pub fn z_of_g(g: Complex64) -> Complex64 {
    c(-0.25, 0.0) + c(0.0, 1.0) / g - c(0.0, 1.0) * g.ln() / (2.0 * PI)
}

/// `ρ(g) = z′(g) = −(i/g²)(1 + g/2π)`.
pub fn rho(g: Complex64) -> Complex64 {
    -c(0.0, 1.0) / (g * g) * (1.0 + g / (2.0 * PI))
}

/// `ϑ_k(g,b) = exp(−b(k + z(g) + i ln(b)/2π))`.
pub fn theta_kernel(k: i32, g: Complex64, b: f64) -> Complex64 {
    (-b * (f64::from(k) + z_of_g(g) + c(0.0, b.ln() / (2.0 * PI)))).exp()
}

/// Whether `g ∈ R_k`, i.e. `Re z(g) + k > 0`.
pub fn in_region(k: i32, g: Complex64) -> bool {
    g.norm() > 0.0 && z_of_g(g).re + f64::from(k) > 0.0
}

/// `h(t,s) = exp(−ts − (it/2π) Log(ts))`.
pub fn h_kernel(t: f64, s: Complex64) -> Complex64 {
    let log_ts = s.ln() + t.ln();
    (-t * s - c(0.0, t / (2.0 * PI)) * log_ts).exp()
}

/// `μ(s) = 1 + i/(2πs)`.
pub fn mu_of_s(s: Complex64) -> Complex64 {
    1.0 + c(0.0, 1.0) / (2.0 * PI * s)
}

/// Whether `s` lies in the half-plane-like region `Re s − arg(s)/2π > d`.
pub fn in_half_region(s: Complex64, d: f64) -> bool {
    s.re - s.arg() / (2.0 * PI) > d
}

// ---------------------------------------------------------------------------
// Asymptotics of P_μ.

/// Coefficient `γ_p = Γ^{(p)}(μ+p+1)/p!` of
/// `P_μ(s) ~ s^{−μ−1} Σ_p (2πis)^{−p} γ_p`.
///
/// Substituting `τ = ts` in `∫ t^{μ+p} e^{−ts} (Log(ts))^p dt` removes every
/// `Log(s)`, so the coefficients are constants.
pub fn gamma_p(mu: f64, p: usize) -> f64 {
    gamma_derivatives(mu + p as f64 + 1.0, p)[p] / factorial_f64(p as u32)
}

/// The double-sum form
/// `Σ_{r≤p} Σ_{m≤r} (−1)^m y^{p−r+m} Γ^{(r−m)}(μ+r+1) / ((p−r)! m! (r−m)!)`
/// as a polynomial in `y = Log(s)`.  It coincides with [`gamma_p`] for
/// `p = 0` and for `(μ, p) = (0, 1)`, but carries `y`-dependent terms in
/// general; it is kept for comparison only.
pub fn gamma_p_double_sum(mu: f64, p: usize, y: Complex64) -> Complex64 {
    let mut total = c(0.0, 0.0);
    for r in 0..=p {
        let d = gamma_derivatives(mu + r as f64 + 1.0, r);
        for m in 0..=r {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let den = factorial_f64((p - r) as u32) * factorial_f64(m as u32) * factorial_f64((r - m) as u32);
            total += y.powu((p - r + m) as u32) * (sign * d[r - m] / den);
        }
    }
    total
}

/// `P_μ(s) = ∫_0^∞ t^μ h(t,s) dt` by adaptive quadrature.
pub fn p_mu(mu: f64, s: Complex64) -> Result<QuadratureResult> {
    if mu < 0.0 || !in_half_region(s, 0.0) {
        return domain("P_mu needs μ ≥ 0 and Re s − arg(s)/2π > 0");
    }
    let rate = s.re - s.arg() / (2.0 * PI);
    let r = integrate_to_infinity(|t| t.powf(mu) * h_kernel(t, s), 0.0, 1.0 / rate, transform_tolerance());
    Ok(r)
}

/// Truncated expansion `S_{μ,q}(s) = s^{−μ−1} Σ_{p≤q} (2πis)^{−p} γ_p`.
pub fn p_mu_asymptotic(mu: f64, s: Complex64, q: usize) -> Complex64 {
    let x = (c(0.0, 2.0 * PI) * s).inv();
    let lead = s.powf(-mu - 1.0);
    (0..=q).map(|p| lead * x.powu(p as u32) * gamma_p(mu, p)).sum()
}

/// Log–log fit of the truncation error `|P_μ(s) − S_{μ,q}(s)|` over real `s`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit {
    pub mu: f64,
    pub q: usize,
    pub s_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
    pub pass: bool,
}

/// Fits the truncation-error slope at the given `s` values.
pub fn asymptotic_scaling(mu: f64, q: usize, s_values: &[f64]) -> Result<ScalingFit> {
    let mut errors = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let p = p_mu(mu, c(s, 0.0))?;
        errors.push((p.value - p_mu_asymptotic(mu, c(s, 0.0), q)).norm());
    }
    let xs: Vec<f64> = s_values.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let expected = -(mu + q as f64 + 2.0);
    Ok(ScalingFit {
        mu,
        q,
        s_values: s_values.to_vec(),
        errors,
        slope,
        expected,
        pass: (slope - expected).abs() <= SLOPE_TOLERANCE,
    })
}

// ---------------------------------------------------------------------------
// Closed forms.

/// Finite sum `Σ c_j s^{−a_j} μ(s)^{−b_j}`; closed under `−μ^{−1}∂_s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuMonomialSum {
    pub terms: Vec<(Complex64, i32, i32)>,
}

impl MuMonomialSum {
    /// `s^{−R} μ^{−1}`, the right-hand side of the identity.
    pub fn borel_rhs(r: i32) -> Self {
        Self {
            terms: vec![(c(1.0, 0.0), r, 1)],
        }
    }

    /// Applies `−μ^{−1}∂_s`:
    /// `s^{−a}μ^{−b} ↦ a s^{−a−1}μ^{−b−1} − (ib/2π) s^{−a−2}μ^{−b−2}`.
    pub fn ladder(&self) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for &(coef, a, b) in &self.terms {
            terms.push((coef * f64::from(a), a + 1, b + 1));
            terms.push((coef * c(0.0, -f64::from(b) / (2.0 * PI)), a + 2, b + 2));
        }
        Self { terms }
    }

    pub fn ladder_pow(&self, p: usize) -> Self {
        (0..p).fold(self.clone(), |acc, _| acc.ladder())
    }

    pub fn scale(&self, f: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(x, a, b)| (x * f, a, b)).collect(),
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mu = mu_of_s(s);
        self.terms
            .iter()
            .map(|&(coef, a, b)| coef * s.powi(-a) * mu.powi(-b))
            .sum()
    }

    /// Expansion in `u = 1/s` up to order `m`:
    /// `μ^{−b} = Σ_k C(b+k−1, k) (−iu/2π)^k`.
    pub fn u_series(&self, m: usize) -> CouplingSeries {
        let mut s = CouplingSeries::zero(SeriesVar::InvS, m);
        let x = c(0.0, -1.0 / (2.0 * PI));
        for &(coef, a, b) in &self.terms {
            assert!(a >= 0 && b >= 0, "u_series needs nonnegative powers");
            for k in 0..=m {
                let power = a as usize + k;
                if power > m {
                    break;
                }
                let binom = if b == 0 {
                    if k == 0 { 1.0 } else { 0.0 }
                } else {
                    binomial_f64((b as usize + k - 1) as u32, k as u32)
                };
                s.coeffs[power] += coef * x.powu(k as u32) * binom;
            }
        }
        s
    }
}

/// Left-hand side `∫_0^∞ h(b,s) b^{R+p−1}/Γ(R − ib/2π) db`.
pub fn borel_lhs(s: Complex64, r: u32, p: u32) -> Result<QuadratureResult> {
    if !in_half_region(s, 0.5) {
        return domain("Borel identity needs Re s − arg(s)/2π > 1/2");
    }
    if r < 1 {
        return domain("Borel identity needs R ≥ 1");
    }
    let rate = s.re - s.arg() / (2.0 * PI) - 0.25;
    let big_r = f64::from(r);
    let power = f64::from(r + p) - 1.0;
    Ok(integrate_to_infinity(
        |b| h_kernel(b, s) * b.powf(power) * rgamma(c(big_r, -b / (2.0 * PI))),
        0.0,
        1.0 / rate,
        transform_tolerance(),
    ))
}

/// Outcome of one Borel identity evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct BorelCheck {
    pub s: Complex64,
    pub r: u32,
    pub p: u32,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub rel_diff: f64,
    pub pass: bool,
}

/// Compares the quadrature with `(−μ^{−1}∂_s)^p [s^{−R}μ^{−1}]`.
pub fn borel_identity(s: Complex64, r: u32, p: u32) -> Result<BorelCheck> {
    let lhs = borel_lhs(s, r, p)?;
    let rhs = MuMonomialSum::borel_rhs(r as i32).ladder_pow(p as usize).eval(s);
    let rel_diff = (lhs.value - rhs).norm() / rhs.norm();
    Ok(BorelCheck {
        s,
        r,
        p,
        lhs: lhs.value,
        rhs,
        rel_diff,
        pass: rel_diff <= BOREL_TOLERANCE && lhs.converged,
    })
}

/// The twelve `(s, R)` points: four `s` in the sector
/// `|arg s| < π/2 − 0.3`, `Re s − arg(s)/2π > 1/2`, times `R ∈ {1,2,3}`.
pub fn borel_grid() -> Vec<(Complex64, u32)> {
    let ss = [c(2.0, 0.0), c(3.0, 0.0), c(1.5, -1.0), c(4.0, 4.0)];
    let mut out = Vec::new();
    for &s in &ss {
        debug_assert!(s.arg().abs() < PI / 2.0 - SECTOR_MARGIN && in_half_region(s, 0.5));
        for r in 1..=3 {
            out.push((s, r));
        }
    }
    out
}

/// `(−μ^{−1}∂_s)^p f` at `s` by nested central differences (step `h`).
pub fn ladder_numeric(f: &dyn Fn(Complex64) -> Complex64, s: Complex64, p: u32, h: f64) -> Complex64 {
    if p == 0 {
        return f(s);
    }
    let inner = |z: Complex64| ladder_numeric(f, z, p - 1, h);
    let d = (inner(s + h) - inner(s - h)) / (2.0 * h);
    -d / mu_of_s(s)
}

// ---------------------------------------------------------------------------
// Characteristic functions and the L transforms.

/// The transformed integrand terms of `L_0` (`which = 0`) or `L_2`: each term
/// is `coef · b^{R+p−1}/Γ(R − ib/2π)` with its closed form, coefficient error
/// and `(R, p)`.
#[derive(Clone, Debug, Serialize)]
pub struct TransformTerm {
    pub coef: Complex64,
    pub err: f64,
    pub r: u32,
    pub p: u32,
}

impl TransformTerm {
    pub fn closed_form(&self) -> MuMonomialSum {
        MuMonomialSum::borel_rhs(self.r as i32)
            .ladder_pow(self.p as usize)
            .scale(self.coef)
    }

    /// `b^{R+p−1}/Γ(R − ib/2π)` times the coefficient.
    pub fn eval(&self, b: f64) -> Complex64 {
        self.coef * b.powi((self.r + self.p) as i32 - 1) * rgamma(c(f64::from(self.r), -b / (2.0 * PI)))
    }
}

/// Terms of `Φ_0(b) e^{−iγb/2π}` or `b Φ_2(b) e^{i(1−γ)b/2π}` built from the
/// perturbative coefficients up to `max_r`.
pub fn transform_terms(which: u8, table: &CoefficientTable) -> Result<Vec<TransformTerm>> {
    let m = table.max_r;
    let mi = c(0.0, -1.0);
    let mut out = Vec::new();
    match which {
        0 => {
            out.push(TransformTerm { coef: c(1.0, 0.0), err: 0.0, r: 1, p: 0 });
            for r in 2..=m {
                let pre = mi.powu(r as u32) * (4.0 * PI * (r - 1) as f64);
                let g = table.gamma0[r];
                out.push(TransformTerm {
                    coef: pre * g.value,
                    err: pre.norm() * g.stderr,
                    r: r as u32,
                    p: 1,
                });
            }
        }
        2 => {
            out.push(TransformTerm { coef: c(1.0, 0.0), err: 0.0, r: 2, p: 0 });
            for r in 2..=m {
                let pre = mi.powu(r as u32) * (r + 1) as f64;
                let g = table.gc[r];
                out.push(TransformTerm {
                    coef: pre * g.value,
                    err: pre.norm() * g.stderr,
                    r: r as u32 + 2,
                    p: 0,
                });
                let pre = mi.powu(r as u32 + 1) * (2.0 * (r - 1) as f64);
                let g = table.gamma0[r];
                out.push(TransformTerm {
                    coef: pre * g.value,
                    err: pre.norm() * g.stderr,
                    r: r as u32 + 2,
                    p: 1,
                });
            }
        }
        _ => return domain(format!("which must be 0 or 2, got {which}")),
    }
    Ok(out)
}

/// `Φ_0(t)` or `Φ_2(t)` as the finite sum of reciprocal-Γ terms.
pub fn phi_function(which: u8, table: &CoefficientTable, t: f64) -> Result<Complex64> {
    let terms = transform_terms(which, table)?;
    let sum: Complex64 = terms.iter().map(|x| x.eval(t)).sum();
    Ok(match which {
        0 => sum * c(0.0, EULER_GAMMA * t / (2.0 * PI)).exp(),
        _ => sum / t * c(0.0, (EULER_GAMMA - 1.0) * t / (2.0 * PI)).exp(),
    })
}

/// `L_0(k,g) = ∫ Φ(b) e^{−iγb/2π} ϑ_k(g,b) db` (`which = 0`) or
/// `L_2(k,g) = ∫ b Φ(b) e^{i(1−γ)b/2π} ϑ_k(g,b) db` (`which = 2`) by
/// quadrature, for a characteristic function supplied as a callable.
pub fn l_transform<F: Fn(f64) -> Complex64>(which: u8, k: i32, g: Complex64, phi: F) -> Result<QuadratureResult> {
    if !in_region(k, g) {
        return domain("g is outside R_k");
    }
    let phase = match which {
        0 => -EULER_GAMMA,
        2 => 1.0 - EULER_GAMMA,
        _ => return domain(format!("which must be 0 or 2, got {which}")),
    };
    let rate = z_of_g(g).re + f64::from(k);
    let f = |b: f64| {
        let w = if which == 2 { b } else { 1.0 };
        w * phi(b) * c(0.0, phase * b / (2.0 * PI)).exp() * theta_kernel(k, g, b)
    };
    let r = integrate_to_infinity(f, 0.0, 1.0 / rate.max(0.05), transform_tolerance());
    if !r.value.re.is_finite() || !r.value.im.is_finite() {
        return Err(Error::Numerical {
            what: "L transform",
            detail: "non-finite quadrature value".into(),
        });
    }
    Ok(r)
}

/// `L_which(0, i/s)` summed termwise from the closed forms.
pub fn l_termwise(which: u8, table: &CoefficientTable, s: Complex64) -> Result<Complex64> {
    Ok(transform_terms(which, table)?
        .iter()
        .map(|t| t.closed_form().eval(s))
        .sum())
}

/// Asymptotic series of `L_which(0, i/s)` in `u = 1/s` to order `n`, from the
/// closed forms.
pub fn l_series_closed(which: u8, table: &CoefficientTable, n: usize) -> Result<CouplingSeries> {
    let mut s = CouplingSeries::zero(SeriesVar::InvS, n);
    for t in transform_terms(which, table)? {
        let term = t.closed_form().scale(c(1.0, 0.0)).u_series(n);
        let unit = MuMonomialSum::borel_rhs(t.r as i32).ladder_pow(t.p as usize).u_series(n);
        let mut add = term;
        for k in 0..=n {
            add.errs[k] = unit.coeffs[k].norm() * t.err;
        }
        s = s.add(&add);
    }
    Ok(s)
}

/// `P_k(s)` as a series in `u`: `u^{k+1} Σ_p (−iu/2π)^p γ_p(k)`, order `n`.
pub fn p_series(k: usize, n: usize) -> CouplingSeries {
    let mut s = CouplingSeries::zero(SeriesVar::InvS, n);
    let x = c(0.0, -1.0 / (2.0 * PI));
    for p in 0..=n {
        let power = k + 1 + p;
        if power > n {
            break;
        }
        s.coeffs[power] = x.powu(p as u32) * gamma_p(k as f64, p);
    }
    s
}

/// Asymptotic series of `L_which(0, i/s)` in `u` to order `n` by the moment
/// route: Taylor coefficients `β_k` of the transformed integrand, then
/// `L ~ Σ_k β_k P_k(s)`.
pub fn l_series_moments(which: u8, table: &CoefficientTable, n: usize) -> Result<CouplingSeries> {
    let beta = match which {
        0 => table.phi0_reduced(),
        2 => {
            // b Φ_2(b) e^{i(1−γ)b/2π} = b · [Φ_2 e^{−i(γ−1)b/2π}]
            let r = table.phi2_reduced();
            r.truncate(r.order() + 1).shift(1)
        }
        _ => return domain(format!("which must be 0 or 2, got {which}")),
    };
    if beta.order() + 1 < n {
        return domain(format!(
            "order {n} needs Taylor data to t^{}, have t^{}",
            n - 1,
            beta.order()
        ));
    }
    let mut s = CouplingSeries::zero(SeriesVar::InvS, n);
    for k in 0..n {
        let pk = p_series(k, n);
        let mut term = pk.scale(beta.coeffs[k]);
        for j in 0..=n {
            term.errs[j] = pk.coeffs[j].norm() * beta.errs[k];
        }
        s = s.add(&term);
    }
    Ok(s)
}

/// `μ(s)` as a series in `u` of order `n`.
fn mu_series(n: usize) -> CouplingSeries {
    let mut s = CouplingSeries::one(SeriesVar::InvS, n);
    if n >= 1 {
        s.coeffs[1] = c(0.0, 1.0 / (2.0 * PI));
    }
    s
}

/// Antiderivative in `s` of a series in `u = 1/s`: `u^k ↦ u^{k−1}/(1−k)`.
/// The `u⁰` and `u¹` inputs (which would give `s` and `log s`) must vanish to
/// within `tol`; the result has order one less and constant term `constant`.
pub fn ls_s(a: &CouplingSeries, constant: Complex64, tol: f64) -> Result<CouplingSeries> {
    assert_eq!(a.var, SeriesVar::InvS, "ls_s needs a series in 1/s");
    let n = a.order();
    if n < 1 {
        return domain("ls_s needs order ≥ 1");
    }
    for k in 0..=1 {
        if a.coeffs[k].norm() > tol {
            return Err(Error::Numerical {
                what: "antiderivative in s",
                detail: format!("coefficient of u^{k} is {} (must vanish)", a.coeffs[k]),
            });
        }
    }
    let mut b = CouplingSeries::zero(SeriesVar::InvS, n - 1);
    b.coeffs[0] = constant;
    for k in 2..=n {
        let f = 1.0 / (1.0 - k as f64);
        b.coeffs[k - 1] = a.coeffs[k] * f;
        b.errs[k - 1] = a.errs[k] * f.abs();
    }
    Ok(b)
}

/// Threshold for coefficients that must vanish identically.
const VANISH_TOL: f64 = 1e-10;

/// `η_0 = (u/4π) LS_s(μ LS_s(μ L_0 − u))` to order `m` (constants fixed by
/// `η_0 = O(u²)`), given `L_0` to order `m + 1`.
pub fn eta0(l0: &CouplingSeries) -> Result<CouplingSeries> {
    let n = l0.order();
    let mut inner = mu_series(n).mul(l0);
    inner.coeffs[1] -= c(1.0, 0.0);
    let first = ls_s(&inner, c(0.0, 0.0), VANISH_TOL)?;
    let second = ls_s(&mu_series(n - 1).mul(&first), c(0.0, 0.0), VANISH_TOL)?;
    Ok(second.truncate(n - 1).shift(1).scale(c(1.0 / (4.0 * PI), 0.0)))
}

/// `η_2 = −s LS_s(μ L_2)` to order `m` (constant fixed by `η_2 = 1 + O(u)`),
/// given `L_2` to order `m + 2`.
pub fn eta2(l2: &CouplingSeries) -> Result<CouplingSeries> {
    let n = l2.order();
    let a = ls_s(&mu_series(n).mul(l2), c(0.0, 0.0), VANISH_TOL)?;
    // Divide by u (constant term is zero) and negate.
    let mut out = CouplingSeries::zero(SeriesVar::InvS, n - 2);
    for k in 0..=n - 2 {
        out.coeffs[k] = -a.coeffs[k + 1];
        out.errs[k] = a.errs[k + 1];
    }
    Ok(out)
}

/// Route used to obtain the asymptotic series of the `L` transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LRoute {
    /// Taylor coefficients of the characteristic function and `P_k` expansions.
    Moments,
    /// Termwise closed forms of the Borel identity.
    ClosedForm,
}

/// `ζ` coefficients compared with the perturbative ones.
#[derive(Clone, Debug, Serialize)]
pub struct ZetaClosure {
    pub which: u8,
    pub route: LRoute,
    /// `ζ_r` (coefficients of `(−g)^r`).
    pub zeta: CouplingSeries,
    /// `Γ^{[0],pt}_{r,1}` (`which = 0`) or `Γ^{[2],pt}_{r,0}` (`which = 2`).
    pub reference: CouplingSeries,
    /// `|ζ_r − reference_r|` in units of the combined standard error.
    pub sigma: Vec<f64>,
}

/// Rounding floor (relative) added to the propagated error in closure checks.
pub const CLOSURE_ROUNDING: f64 = 1e-12;

/// Builds `ζ^{[which]}` to order `table.max_r` and compares with the
/// perturbative series.
pub fn zeta_closure(which: u8, table: &CoefficientTable, route: LRoute) -> Result<ZetaClosure> {
    let m = table.max_r;
    let l = |n: usize| match route {
        LRoute::Moments => l_series_moments(which, table, n),
        LRoute::ClosedForm => l_series_closed(which, table, n),
    };
    let (zeta, reference) = match which {
        0 => (eta0(&l(m + 1)?)?.u_to_minus_g(), table.gamma0_series()),
        2 => (eta2(&l(m + 2)?)?.reciprocal()?.u_to_minus_g(), table.gamma2_series()),
        _ => return domain(format!("which must be 0 or 2, got {which}")),
    };
    let sigma = (0..=m)
        .map(|r| {
            let diff = (zeta.coeffs[r] - reference.coeffs[r]).norm();
            let scale = zeta.coeffs[r].norm().max(reference.coeffs[r].norm()).max(1.0);
            let err = zeta.errs[r].hypot(reference.errs[r]) + CLOSURE_ROUNDING * scale;
            diff / err
        })
        .collect();
    Ok(ZetaClosure {
        which,
        route,
        zeta,
        reference,
        sigma,
    })
}

/// `|h(t,s)| ≤ exp(−t|s| cos(π/2 − ξ/2))` on a grid of large `s` in the
/// sector `|arg s| < π/2 − ξ`; returns the largest ratio found.
pub fn kernel_bound_ratio(xi: f64, radii: &[f64], n_angles: usize, ts: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let amax = PI / 2.0 - xi;
    for &rad in radii {
        for j in 0..n_angles {
            let phi = -amax + 2.0 * amax * (j as f64 + 0.5) / n_angles as f64;
            let s = Complex64::from_polar(rad, phi);
            for &t in ts {
                let bound = (-t * rad * (PI / 2.0 - xi / 2.0).cos()).exp();
                worst = worst.max(h_kernel(t, s).norm() / bound);
            }
        }
    }
    worst
}

/// `∫_0^∞ h(b,s) f(b) db` for a finite interval cross-check of adaptive
/// settings (used by tests).
pub fn h_integral_finite<F: Fn(f64) -> Complex64>(s: Complex64, f: F, a: f64, b: f64) -> QuadratureResult {
    integrate(|x| h_kernel(x, s) * f(x), a, b, transform_tolerance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Estimate;
    use approx::assert_relative_eq;

    fn synthetic() -> CoefficientTable {
        CoefficientTable::from_values(
            vec![
                Estimate::default(),
                Estimate::default(),
                Estimate::new(0.0043, 1e-6),
                Estimate::new(-0.0011, 1e-6),
                Estimate::new(0.0007, 1e-6),
            ],
            vec![
                Estimate::default(),
                Estimate::default(),
                Estimate::new(0.021, 1e-5),
                Estimate::new(0.012, 1e-5),
                Estimate::new(-0.003, 1e-5),
            ],
        )
    }

    #[test]
    fn kernel_identities() {
        // ϑ_{k+1} = e^{−b} ϑ_k
        let g = c(0.1, 0.3);
        for &b in &[0.1, 1.0, 3.7] {
            let r = theta_kernel(1, g, b) / theta_kernel(0, g, b);
            assert!((r - (-b).exp()).norm() < 1e-14);
        }
        // b → 0⁺: ϑ → 1
        assert!((theta_kernel(0, g, 1e-12) - 1.0).norm() < 1e-9);
        // Bridge to h(t,s) for arg g ∈ (0, π).
        for &g in &[c(0.0, 0.2), c(0.1, 0.3), c(-0.2, 0.1)] {
            let s = c(0.0, 1.0) / g;
            for &b in &[0.05, 0.7, 2.5] {
                assert!((theta_kernel(0, g, b) - h_kernel(b, s)).norm() < 1e-13 * h_kernel(b, s).norm().max(1e-300));
            }
        }
    }

    #[test]
    fn gamma_p_values() {
        // γ_0 = Γ(μ+1); γ_1(μ=0) = Γ'(2) = 1 − γ.
        assert_relative_eq!(gamma_p(0.0, 0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_p(1.5, 0), crate::special::gamma_real(2.5), max_relative = 1e-14);
        assert_relative_eq!(gamma_p(0.0, 1), 1.0 - EULER_GAMMA, max_relative = 1e-13);
        let y = c(0.4, 0.2);
        assert!((gamma_p_double_sum(0.0, 1, y) - gamma_p(0.0, 1)).norm() < 1e-13);
        // The double sum depends on y once μ ≠ 0.
        let d1 = gamma_p_double_sum(1.0, 1, c(0.0, 0.0));
        let d2 = gamma_p_double_sum(1.0, 1, c(1.0, 0.0));
        assert!((d1 - d2).norm() > 0.5);
    }

    #[test]
    fn p_mu_leading_term() {
        // s P_0(s) → 1 along the real axis.
        let p = p_mu(0.0, c(200.0, 0.0)).unwrap();
        assert!((p.value * 200.0 - 1.0).norm() < 1e-2);
        // And the asymptotic sum is accurate there.
        let s = p_mu_asymptotic(0.0, c(200.0, 0.0), 3);
        assert!((p.value - s).norm() < 1e-12);
    }

    #[test]
    fn ladder_closed_forms_match_numeric_derivatives() {
        let s = c(2.3, 0.7);
        for r in 1..=3 {
            let base = MuMonomialSum::borel_rhs(r);
            let f = |z: Complex64| base.eval(z);
            for p in 1..=2u32 {
                let exact = base.ladder_pow(p as usize).eval(s);
                let num = ladder_numeric(&f, s, p, 1e-3);
                assert!((exact - num).norm() < 1e-5 * exact.norm(), "r={r} p={p}");
            }
        }
    }

    #[test]
    fn u_series_matches_evaluation() {
        let f = MuMonomialSum::borel_rhs(2).ladder_pow(2);
        let ser = f.u_series(30);
        let s = c(40.0, 5.0);
        let direct = f.eval(s);
        let summed = ser.eval(s.inv());
        assert!((direct - summed).norm() < 1e-14 * direct.norm());
    }

    #[test]
    fn borel_identity_examples() {
        let chk = borel_identity(c(2.0, 0.0), 2, 0).unwrap();
        let rhs = 1.0 / (4.0 * (1.0 - 1.0 / c(0.0, 4.0 * PI)));
        assert!((chk.rhs - rhs).norm() < 1e-15);
        assert!(chk.pass, "{chk:?}");
        assert!(borel_identity(c(3.0, 0.0), 1, 0).unwrap().pass);
        for p in 1..=2 {
            assert!(borel_identity(c(2.5, 0.5), 2, p).unwrap().pass);
        }
    }

    #[test]
    fn l_routes_agree() {
        let t = synthetic();
        for which in [0u8, 2] {
            let a = l_series_closed(which, &t, 6).unwrap();
            let b = l_series_moments(which, &t, 5).unwrap();
            for k in 0..=5 {
                assert!((a.coeffs[k] - b.coeffs[k]).norm() < 1e-12, "which={which} k={k}");
            }
        }
        // L_0 = u − iu²/2π + O(u³); L_2 = u² + O(u³).
        let l0 = l_series_closed(0, &t, 3).unwrap();
        assert!((l0.coeffs[1] - 1.0).norm() < 1e-15);
        assert!((l0.coeffs[2] - c(0.0, -1.0 / (2.0 * PI))).norm() < 1e-15);
        let l2 = l_series_closed(2, &t, 3).unwrap();
        assert!(l2.coeffs[1].norm() < 1e-15 && (l2.coeffs[2] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn termwise_matches_quadrature() {
        let t = synthetic();
        for which in [0u8, 2] {
            for &y in &[0.05, 0.2, 0.5] {
                let g = c(0.0, y);
                let s = c(0.0, 1.0) / g;
                let q = l_transform(which, 0, g, |b| phi_function(which, &t, b).unwrap()).unwrap();
                let w = l_termwise(which, &t, s).unwrap();
                assert!((q.value - w).norm() < 1e-8 * w.norm(), "which={which} y={y}: {} vs {}", q.value, w);
            }
        }
    }

    #[test]
    fn closure_holds_for_arbitrary_coefficients() {
        let t = synthetic();
        for route in [LRoute::Moments, LRoute::ClosedForm] {
            for which in [0u8, 2] {
                let z = zeta_closure(which, &t, route).unwrap();
                for (r, s) in z.sigma.iter().enumerate() {
                    assert!(*s <= 3.0, "which={which} r={r} route={route:?} {z:?}");
                }
            }
        }
    }

    #[test]
    fn kernel_bound_holds() {
        let ratio = kernel_bound_ratio(0.3, &[20.0, 50.0, 100.0], 9, &[0.01, 0.1, 0.5, 1.0, 3.0]);
        assert!(ratio <= 1.0, "{ratio}");
    }
}
