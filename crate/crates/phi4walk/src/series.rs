//! Truncated formal power series with propagated errors, the perturbative
//! coefficients of the m-extremal proper functions, and the characteristic
//! function series of the limiting walk statistics.
//!
//! Sign convention: series "in g" are stored in powers of `(−g)`; series in
//! `u = 1/s` are stored in powers of `u`; with `g = i/s = iu` the two are
//! related by `(−g)^k = (−i)^k u^k` (see [`CouplingSeries::u_to_minus_g`]).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::feynman::{FeynmanGraph, GammaCache};
use crate::graph::{enumerate_mf, factorial, graph_of_matrix, BalancedMatrix, DirectedMultigraph};
use crate::special::{factorial_f64, gamma_real, polygamma, zeta, EULER_GAMMA};
use crate::weights::{a1_closed, ratio_to_f64, wei_partition};

/// Expansion variable of a [`CouplingSeries`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesVar {
    /// Powers of `(−g)`.
    MinusG,
    /// Powers of `u = 1/s`.
    InvS,
    /// Powers of `t`.
    T,
}

/// A real value with a standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

/// Truncated power series `Σ_{k≤M} c_k x^k` with complex coefficients and a
/// first-order (independent-error) propagated standard error per coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingSeries {
    pub var: SeriesVar,
    pub coeffs: Vec<Complex64>,
    pub errs: Vec<f64>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Error of a convolution `Σ a_i b_{k−i}` to first order, treating all input
/// errors as independent.
fn conv_err(a: &[Complex64], ea: &[f64], b: &[Complex64], eb: &[f64], k: usize) -> f64 {
    (0..=k)
        .map(|i| (a[i].norm() * eb[k - i]).powi(2) + (ea[i] * b[k - i].norm()).powi(2))
        .sum::<f64>()
        .sqrt()
}

impl CouplingSeries {
    /// Zero series of order `m`.
    pub fn zero(var: SeriesVar, m: usize) -> Self {
        Self {
            var,
            coeffs: vec![Complex64::new(0.0, 0.0); m + 1],
            errs: vec![0.0; m + 1],
        }
    }

    /// Constant one.
    pub fn one(var: SeriesVar, m: usize) -> Self {
        let mut s = Self::zero(var, m);
        s.coeffs[0] = c(1.0, 0.0);
        s
    }

    /// Exact series from coefficients.
    pub fn exact(var: SeriesVar, coeffs: Vec<Complex64>) -> Self {
        let n = coeffs.len();
        assert!(n > 0, "a series needs at least one coefficient");
        Self {
            var,
            coeffs,
            errs: vec![0.0; n],
        }
    }

    /// Series from coefficients and errors.
    pub fn with_errors(var: SeriesVar, coeffs: Vec<Complex64>, errs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), errs.len(), "coefficient and error lengths differ");
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Self { var, coeffs, errs }
    }

    /// Truncation order `M`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn err(&self, k: usize) -> f64 {
        self.errs.get(k).copied().unwrap_or(0.0)
    }

    /// Truncates (or zero-extends) to order `m`.
    pub fn truncate(&self, m: usize) -> Self {
        let mut s = Self::zero(self.var, m);
        for k in 0..=m.min(self.order()) {
            s.coeffs[k] = self.coeffs[k];
            s.errs[k] = self.errs[k];
        }
        s
    }

    fn check_var(&self, other: &Self) {
        assert_eq!(self.var, other.var, "series variables differ");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_var(other);
        let m = self.order().min(other.order());
        let mut s = Self::zero(self.var, m);
        for k in 0..=m {
            s.coeffs[k] = self.coeffs[k] + other.coeffs[k];
            s.errs[k] = self.errs[k].hypot(other.errs[k]);
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, f: Complex64) -> Self {
        Self {
            var: self.var,
            coeffs: self.coeffs.iter().map(|&x| x * f).collect(),
            errs: self.errs.iter().map(|&e| e * f.norm()).collect(),
        }
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_var(other);
        let m = self.order().min(other.order());
        let mut s = Self::zero(self.var, m);
        for k in 0..=m {
            s.coeffs[k] = (0..=k).map(|i| self.coeffs[i] * other.coeffs[k - i]).sum();
            s.errs[k] = conv_err(&self.coeffs, &self.errs, &other.coeffs, &other.errs, k);
        }
        s
    }

    /// Formal reciprocal; needs a nonzero constant term.
    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return domain("reciprocal of a series with zero constant term");
        }
        let m = self.order();
        let mut b = vec![Complex64::new(0.0, 0.0); m + 1];
        b[0] = a0.inv();
        for k in 1..=m {
            let s: Complex64 = (1..=k).map(|i| self.coeffs[i] * b[k - i]).sum();
            b[k] = -s * b[0];
        }
        // δb = −b² δa to first order.
        let b2: Vec<Complex64> = (0..=m).map(|k| (0..=k).map(|i| b[i] * b[k - i]).sum()).collect();
        let zero = vec![0.0; m + 1];
        let errs = (0..=m).map(|k| conv_err(&b2, &zero, &self.coeffs, &self.errs, k)).collect();
        Ok(Self {
            var: self.var,
            coeffs: b,
            errs,
        })
    }

    /// Formal derivative (order drops by one; order-0 input gives zero).
    pub fn derivative(&self) -> Self {
        let m = self.order();
        if m == 0 {
            return Self::zero(self.var, 0);
        }
        let mut s = Self::zero(self.var, m - 1);
        for k in 1..=m {
            s.coeffs[k - 1] = self.coeffs[k] * k as f64;
            s.errs[k - 1] = self.errs[k] * k as f64;
        }
        s
    }

    /// Formal antiderivative with integration constant `c0` (order rises by one).
    pub fn antiderivative(&self, c0: Complex64) -> Self {
        let m = self.order();
        let mut s = Self::zero(self.var, m + 1);
        s.coeffs[0] = c0;
        for k in 0..=m {
            s.coeffs[k + 1] = self.coeffs[k] / (k + 1) as f64;
            s.errs[k + 1] = self.errs[k] / (k + 1) as f64;
        }
        s
    }

    /// Multiplies by `x^k`, keeping the order.
    pub fn shift(&self, k: usize) -> Self {
        let m = self.order();
        let mut s = Self::zero(self.var, m);
        for j in k..=m {
            s.coeffs[j] = self.coeffs[j - k];
            s.errs[j] = self.errs[j - k];
        }
        s
    }

    /// Re-expresses a series in `u = 1/s` as a series in `(−g)` with `g = iu`.
    pub fn u_to_minus_g(&self) -> Self {
        assert_eq!(self.var, SeriesVar::InvS, "u_to_minus_g needs a series in 1/s");
        let mut s = self.clone();
        s.var = SeriesVar::MinusG;
        let mut f = c(1.0, 0.0);
        let step = c(0.0, -1.0).inv();
        for k in 0..=s.order() {
            s.coeffs[k] *= f;
            f *= step;
        }
        s
    }

    /// Value of the truncated series at `x`.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * x + a)
    }
}

/// `exp(a x)` truncated at order `m`.
pub fn exp_linear(var: SeriesVar, a: Complex64, m: usize) -> CouplingSeries {
    let mut coeffs = Vec::with_capacity(m + 1);
    let mut term = c(1.0, 0.0);
    for k in 0..=m {
        coeffs.push(term);
        term *= a / (k + 1) as f64;
    }
    CouplingSeries::exact(var, coeffs)
}

// ---------------------------------------------------------------------------
// Reciprocal Γ expansions.

/// Taylor coefficients `d_q` of `1/Γ(R + h) = Σ d_q h^q` for integer `R ≥ 1`,
/// from `1/Γ(1+h) = exp(γh − Σ_{k≥2} ζ(k)(−h)^k/k)` and the functional equation.
pub fn rgamma_taylor_integer(r: u32, order: usize) -> Vec<f64> {
    assert!(r >= 1, "rgamma_taylor_integer needs R ≥ 1");
    let mut l = vec![0.0; order + 1];
    if order >= 1 {
        l[1] = EULER_GAMMA;
    }
    for (k, lk) in l.iter_mut().enumerate().skip(2) {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        *lk = sign * zeta(k as f64) / k as f64;
    }
    let mut d = crate::special::exp_series(&l, order);
    // Divide by (1+h)(2+h)…(R−1+h).
    for j in 1..r {
        let j = f64::from(j);
        let mut q = vec![0.0; order + 1];
        for k in 0..=order {
            let prev = if k > 0 { q[k - 1] } else { 0.0 };
            q[k] = (d[k] - prev) / j;
        }
        d = q;
    }
    d
}

/// Taylor coefficients of `1/Γ(x + h)` for real `x > 0` from polygamma
/// values: `1/Γ(x+h) = exp(−Σ_{k≥1} ψ^{(k−1)}(x) h^k / k!) / Γ(x)`.
pub fn rgamma_taylor_polygamma(x: f64, order: usize) -> Vec<f64> {
    let mut l = vec![0.0; order + 1];
    for (k, lk) in l.iter_mut().enumerate().skip(1) {
        *lk = -polygamma(k as u32 - 1, x) / factorial_f64(k as u32);
    }
    let g = gamma_real(x);
    crate::special::exp_series(&l, order).into_iter().map(|e| e / g).collect()
}

/// Coefficients `c_q` of `1/Γ(R − it/2π) = Σ_q c_q t^q`.
pub fn rgamma_shifted(r: u32, order: usize) -> Vec<Complex64> {
    let d = rgamma_taylor_integer(r, order);
    let step = c(0.0, -1.0 / (2.0 * PI));
    let mut f = c(1.0, 0.0);
    d.iter()
        .map(|&dq| {
            let v = f * dq;
            f *= step;
            v
        })
        .collect()
}

/// Expansion `t^{r−1}/Γ(r − it/2π) = Σ_p ga_p(r) t^p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReciprocalGammaExpansion {
    pub r: u32,
    /// `ga_p(r)` for `p = 0..=order`.
    pub coefficients: Vec<Complex64>,
}

impl ReciprocalGammaExpansion {
    pub fn new(r: u32, order: usize) -> Self {
        let cq = rgamma_shifted(r, order);
        let shift = r as usize - 1;
        let coefficients = (0..=order)
            .map(|p| if p >= shift { cq[p - shift] } else { c(0.0, 0.0) })
            .collect();
        Self { r, coefficients }
    }

    pub fn ga(&self, p: usize) -> Complex64 {
        self.coefficients.get(p).copied().unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------
// Perturbative coefficients.

/// `Γ^{[0],pt}_{r,1}` by both normalisations.
#[derive(Clone, Debug, Serialize)]
pub struct Gamma0Coeff {
    pub r: usize,
    /// `(1/r!) Σ_F a_{F,0,1} Γ_{G(F)}(0)/(4π)^{r+1}`.
    pub value: Estimate,
    /// `(1/(r! 8^r)) Σ_F cof(A−F)/Π F! · I(F)` with `I(F) = 16^r Γ_G/(4π)^{r+1}`.
    pub via_cofactor: f64,
    pub n_matrices: usize,
}

/// `G^{[C],ob}_{r,0}` by both normalisations.
#[derive(Clone, Debug, Serialize)]
pub struct GcCoeff {
    pub r: usize,
    /// `(1/r!) Σ_F a_{F,0,1} Σ_e Γ_{G(F)∖e}(0)/(4π)^r`.
    pub value: Estimate,
    /// `(4/(r! 8^r)) Σ_F cof(A−F)/Π F! · 𝓘(F)` with `𝓘(F) = 16^r Σ_e Γ_{G∖e}/(4 (4π)^r)`.
    pub via_cofactor: f64,
    pub n_matrices: usize,
}

fn check_order(r: usize) -> Result<()> {
    if !(2..=4).contains(&r) {
        return domain(format!("perturbative coefficients are computed for 2 ≤ r ≤ 4, got r = {r}"));
    }
    Ok(())
}

fn cof_over_mult(f: &BalancedMatrix) -> f64 {
    let mult: num_bigint::BigInt = f.entries().iter().map(|&x| factorial(x)).product();
    ratio_to_f64(&num_rational::BigRational::new(f.laplacian_cofactor(), mult))
}

/// Weighted sum of cached integrals; one graph class used by several
/// matrices contributes a single (fully correlated) error term.
#[derive(Default)]
struct Accumulator {
    map: BTreeMap<BalancedMatrix, (f64, f64, f64)>,
}

impl Accumulator {
    fn add(&mut self, g: &DirectedMultigraph, weight: f64, cache: &mut GammaCache) -> Result<f64> {
        let fg = FeynmanGraph::from_directed(g);
        let key = fg.strip_legs().0.canonical_key();
        let q = cache.gamma_of(&fg)?;
        let e = self.map.entry(key).or_insert((0.0, q.re(), q.stderr));
        e.0 += weight;
        Ok(q.re())
    }

    fn total(&self) -> Estimate {
        let value = self.map.values().map(|&(w, v, _)| w * v).sum();
        let var: f64 = self.map.values().map(|&(w, _, e)| (w * e).powi(2)).sum();
        Estimate::new(value, var.sqrt())
    }
}

/// `Γ^{[0],pt}_{r,1}` for `2 ≤ r ≤ 4`.
pub fn gamma0_coeff(r: usize, cache: &mut GammaCache) -> Result<Gamma0Coeff> {
    check_order(r)?;
    let fs = enumerate_mf(r, 0, 2, 2)?;
    let scale = factorial_f64(r as u32) * (4.0 * PI).powi(r as i32 + 1);
    let mut acc = Accumulator::default();
    let mut alt = 0.0;
    for f in &fs {
        let a = ratio_to_f64(&a1_closed(f)?);
        let gamma = acc.add(&graph_of_matrix(f), a / scale, cache)?;
        let i_f = 16f64.powi(r as i32) * gamma / (4.0 * PI).powi(r as i32 + 1);
        alt += cof_over_mult(f) * i_f;
    }
    Ok(Gamma0Coeff {
        r,
        value: acc.total(),
        via_cofactor: alt / (factorial_f64(r as u32) * 8f64.powi(r as i32)),
        n_matrices: fs.len(),
    })
}

/// `G^{[C],ob}_{r,0}` for `2 ≤ r ≤ 4` (cut-edge integrals `Γ_{G∖e}`).
pub fn gc_coeff(r: usize, cache: &mut GammaCache) -> Result<GcCoeff> {
    check_order(r)?;
    let fs = enumerate_mf(r, 0, 2, 2)?;
    let norm = (4.0 * PI).powi(r as i32);
    let scale = factorial_f64(r as u32) * norm;
    let mut acc = Accumulator::default();
    let mut alt = 0.0;
    for f in &fs {
        let a = ratio_to_f64(&a1_closed(f)?);
        let g = graph_of_matrix(f);
        // Edges of one parallel class give the same integral.
        let mut sum = 0.0;
        for i in 0..r {
            for j in 0..r {
                let mult = f64::from(f.get(i, j));
                if mult == 0.0 {
                    continue;
                }
                let e = g
                    .edges()
                    .iter()
                    .position(|&x| x == (i, j))
                    .expect("edge class present in graph");
                sum += mult * acc.add(&g.delete_edge(e)?, a * mult / scale, cache)?;
            }
        }
        let i_f = 16f64.powi(r as i32) * sum / (4.0 * norm);
        alt += cof_over_mult(f) * i_f;
    }
    Ok(GcCoeff {
        r,
        value: acc.total(),
        via_cofactor: 4.0 * alt / (factorial_f64(r as u32) * 8f64.powi(r as i32)),
        n_matrices: fs.len(),
    })
}

/// Sum of the `m⁰` coefficients of `wei_F(m,0)` over `H_r(2,…,2)`; vanishes
/// because every admissible pairing has at least one cycle.
pub fn vacuum_m0_coefficient(r: usize) -> Result<num_rational::BigRational> {
    let mut total = num_rational::BigRational::from_integer(0.into());
    for f in enumerate_mf(r, 0, 2, 2)? {
        total += wei_partition(&f, 0)?.coeff(0);
    }
    Ok(total)
}

/// Perturbative inputs indexed by `r` (entries for `r < 2` are zero).
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientTable {
    pub max_r: usize,
    pub gamma0: Vec<Estimate>,
    pub gc: Vec<Estimate>,
}

impl CoefficientTable {
    /// Computes all coefficients with `2 ≤ r ≤ max_r`.
    pub fn compute(max_r: usize, cache: &mut GammaCache) -> Result<Self> {
        let mut gamma0 = vec![Estimate::default(); max_r + 1];
        let mut gc = vec![Estimate::default(); max_r + 1];
        for r in 2..=max_r {
            gamma0[r] = gamma0_coeff(r, cache)?.value;
            gc[r] = gc_coeff(r, cache)?.value;
        }
        Ok(Self { max_r, gamma0, gc })
    }

    /// Table from given values (for algebraic tests).
    pub fn from_values(gamma0: Vec<Estimate>, gc: Vec<Estimate>) -> Self {
        assert_eq!(gamma0.len(), gc.len(), "coefficient tables differ in length");
        Self {
            max_r: gamma0.len() - 1,
            gamma0,
            gc,
        }
    }

    fn g0(&self, r: usize) -> Estimate {
        self.gamma0.get(r).copied().unwrap_or_default()
    }

    fn gc(&self, r: usize) -> Estimate {
        self.gc.get(r).copied().unwrap_or_default()
    }

    /// `Γ^{[0]}` at `m¹` as a series in `(−g)` up to order `max_r`.
    pub fn gamma0_series(&self) -> CouplingSeries {
        let mut s = CouplingSeries::zero(SeriesVar::MinusG, self.max_r);
        for r in 2..=self.max_r {
            s.coeffs[r] = c(self.g0(r).value, 0.0);
            s.errs[r] = self.g0(r).stderr;
        }
        s
    }

    /// `G^{[C],ob}` at `m⁰` as a series in `(−g)` up to order `max_r`.
    pub fn gc_series(&self) -> CouplingSeries {
        let mut s = CouplingSeries::zero(SeriesVar::MinusG, self.max_r);
        for r in 2..=self.max_r {
            s.coeffs[r] = c(self.gc(r).value, 0.0);
            s.errs[r] = self.gc(r).stderr;
        }
        s
    }

    /// `Σ^{[U]}` at `m⁰`: `2 Σ_r Γ_{r,1}(r−1)(−g)^{r+1} / (1 + g/2π)` up to
    /// order `max_r` (needs `Γ_{r,1}` for `r ≤ max_r − 1`).
    pub fn sigma_u(&self) -> CouplingSeries {
        let m = self.max_r;
        let num = self.sigma_u_numerator();
        // 1 + g/2π = 1 − (−g)/2π
        let mut den = CouplingSeries::zero(SeriesVar::MinusG, m);
        den.coeffs[0] = c(1.0, 0.0);
        if m >= 1 {
            den.coeffs[1] = c(-1.0 / (2.0 * PI), 0.0);
        }
        num.mul(&den.reciprocal().expect("constant term one"))
    }

    /// Numerator series of [`Self::sigma_u`].
    pub fn sigma_u_numerator(&self) -> CouplingSeries {
        let m = self.max_r;
        let mut num = CouplingSeries::zero(SeriesVar::MinusG, m);
        for r in 2..m {
            let g = self.g0(r);
            num.coeffs[r + 1] = c(2.0 * g.value * (r - 1) as f64, 0.0);
            num.errs[r + 1] = 2.0 * g.stderr * (r - 1) as f64;
        }
        num
    }

    /// `G^{[2]} = 1 + Σ_r (G^{[C]}_r + Σ^{[U]}_r)(−g)^r`.
    pub fn g2_series(&self) -> CouplingSeries {
        CouplingSeries::one(SeriesVar::MinusG, self.max_r)
            .add(&self.gc_series())
            .add(&self.sigma_u())
    }

    /// `Γ^{[2],pt}` at `m⁰`: the formal reciprocal of [`Self::g2_series`].
    pub fn gamma2_series(&self) -> CouplingSeries {
        self.g2_series().reciprocal().expect("constant term one")
    }

    /// `Φ_0(t) e^{−iγt/2π}` as a Taylor series in `t` up to order `max_r`.
    pub fn phi0_reduced(&self) -> CouplingSeries {
        let m = self.max_r;
        let mut s = CouplingSeries::exact(SeriesVar::T, rgamma_shifted(1, m));
        for r in 2..=m {
            let g = self.g0(r);
            // 4π Γ_{r,1}(r−1)(−i)^r t^r / Γ(r − it/2π)
            let pre = c(0.0, -1.0).powu(r as u32) * (4.0 * PI * (r - 1) as f64);
            let rg = CouplingSeries::exact(SeriesVar::T, rgamma_shifted(r as u32, m)).shift(r);
            let mut term = rg.scale(pre * g.value);
            for k in 0..=m {
                term.errs[k] = (rg.coeffs[k] * pre).norm() * g.stderr;
            }
            s = s.add(&term);
        }
        s
    }

    /// `Φ_2(t) e^{−i(γ−1)t/2π}` as a Taylor series in `t` up to order `max_r`.
    pub fn phi2_reduced(&self) -> CouplingSeries {
        let m = self.max_r;
        let mut s = CouplingSeries::exact(SeriesVar::T, rgamma_shifted(2, m));
        let add_term = |s: CouplingSeries, coef: Estimate, pre: Complex64, power: usize, big_r: u32| {
            let rg = CouplingSeries::exact(SeriesVar::T, rgamma_shifted(big_r, m)).shift(power);
            let mut term = rg.scale(pre * coef.value);
            for k in 0..=m {
                term.errs[k] = (rg.coeffs[k] * pre).norm() * coef.stderr;
            }
            s.add(&term)
        };
        for r in 2..=m {
            let mi = c(0.0, -1.0);
            s = add_term(s, self.gc(r), mi.powu(r as u32) * (r + 1) as f64, r, r as u32 + 2);
            if r < m {
                s = add_term(s, self.g0(r), mi.powu(r as u32 + 1) * (2.0 * (r - 1) as f64), r + 1, r as u32 + 2);
            }
        }
        s
    }

    /// Characteristic function series `Φ_0` (`which = 0`) or `Φ_2` (`which = 2`).
    pub fn phi_series(&self, which: u8) -> Result<CouplingSeries> {
        let m = self.max_r;
        match which {
            0 => Ok(exp_linear(SeriesVar::T, c(0.0, EULER_GAMMA / (2.0 * PI)), m).mul(&self.phi0_reduced())),
            2 => Ok(exp_linear(SeriesVar::T, c(0.0, (EULER_GAMMA - 1.0) / (2.0 * PI)), m).mul(&self.phi2_reduced())),
            _ => domain(format!("which must be 0 or 2, got {which}")),
        }
    }

    /// Moments `E(ν^j) = j! [t^j]Φ / i^j` for `j = 0..=max_r`.
    pub fn moments(&self, which: u8) -> Result<Vec<MomentEstimate>> {
        let phi = self.phi_series(which)?;
        Ok((0..=phi.order())
            .map(|j| {
                let f = factorial_f64(j as u32);
                let v = phi.coeffs[j] * f / c(0.0, 1.0).powu(j as u32);
                MomentEstimate {
                    j,
                    re: v.re,
                    im: v.im,
                    stderr: phi.errs[j] * f,
                }
            })
            .collect())
    }
}

/// One moment `E(ν^j)`; the imaginary part is numerical noise.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentEstimate {
    pub j: usize,
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(coeffs: &[f64]) -> CouplingSeries {
        CouplingSeries::exact(SeriesVar::MinusG, coeffs.iter().map(|&x| c(x, 0.0)).collect())
    }

    #[test]
    fn reciprocal_roundtrip_and_error_propagation() {
        let a = CouplingSeries::with_errors(
            SeriesVar::MinusG,
            vec![c(1.0, 0.0), c(0.3, 0.1), c(-0.2, 0.0), c(0.05, 0.0)],
            vec![0.0, 0.01, 0.02, 0.0],
        );
        let p = a.mul(&a.reciprocal().unwrap());
        assert!((p.coeffs[0] - 1.0).norm() < 1e-15);
        for k in 1..=3 {
            assert!(p.coeffs[k].norm() < 1e-15);
        }
        let r = a.reciprocal().unwrap();
        // First-order: δb₁ = −δa₁, δb₂ = −δa₂ + 2a₁δa₁.
        assert_relative_eq!(r.errs[1], 0.01, max_relative = 1e-12);
        let e2 = (0.02f64.powi(2) + (2.0 * c(0.3, 0.1).norm() * 0.01).powi(2)).sqrt();
        assert_relative_eq!(r.errs[2], e2, max_relative = 1e-12);
        assert!(series(&[0.0, 1.0]).reciprocal().is_err());
    }

    #[test]
    fn derivative_antiderivative_roundtrip() {
        let a = series(&[0.5, 1.0, -2.0, 3.0]);
        let b = a.antiderivative(c(0.5, 0.0)).derivative();
        assert_eq!(b, a);
    }

    #[test]
    fn rgamma_routes_agree() {
        for r in 1..=5u32 {
            let a = rgamma_taylor_integer(r, 8);
            let b = rgamma_taylor_polygamma(f64::from(r), 8);
            assert_relative_eq!(a[0], 1.0 / factorial_f64(r - 1), max_relative = 1e-14);
            for k in 0..=8 {
                assert!((a[k] - b[k]).abs() < 1e-12 * (1.0 + a[k].abs()), "r={r} k={k}");
            }
        }
        // Known: 1/Γ(1+h) = 1 + γh + (γ²/2 − π²/12)h² + …
        let d = rgamma_taylor_integer(1, 2);
        assert_relative_eq!(d[1], EULER_GAMMA, max_relative = 1e-15);
        assert_relative_eq!(d[2], EULER_GAMMA.powi(2) / 2.0 - PI * PI / 12.0, max_relative = 1e-13);
    }

    #[test]
    fn ga_leading_coefficient() {
        for r in 1..=4u32 {
            let e = ReciprocalGammaExpansion::new(r, 6);
            let p0 = r as usize - 1;
            assert_relative_eq!(e.ga(p0).re, 1.0 / factorial_f64(r - 1), max_relative = 1e-14);
            for p in 0..p0 {
                assert_eq!(e.ga(p), c(0.0, 0.0));
            }
        }
    }

    fn synthetic() -> CoefficientTable {
        CoefficientTable::from_values(
            vec![
                Estimate::default(),
                Estimate::default(),
                Estimate::new(0.004, 1e-6),
                Estimate::new(-0.001, 1e-6),
                Estimate::new(0.0007, 1e-6),
            ],
            vec![
                Estimate::default(),
                Estimate::default(),
                Estimate::new(0.02, 1e-5),
                Estimate::new(0.01, 1e-5),
                Estimate::new(-0.003, 1e-5),
            ],
        )
    }

    #[test]
    fn phi_normalisation_and_zero_mean() {
        let t = synthetic();
        for which in [0, 2] {
            let phi = t.phi_series(which).unwrap();
            assert!((phi.coeffs[0] - 1.0).norm() < 1e-15);
        }
        // E(ν₀) = 0: the γ prefactor cancels ψ(1) = −γ.
        let m0 = t.moments(0).unwrap();
        assert!(m0[1].re.abs() < 1e-15 && m0[1].im.abs() < 1e-15);
        // Moments are real by construction of the phases.
        for which in [0, 2] {
            for m in t.moments(which).unwrap() {
                assert!(m.im.abs() < 1e-12 * (1.0 + m.re.abs()), "{m:?}");
            }
        }
    }

    #[test]
    fn sigma_u_division_roundtrip_and_zero() {
        let t = synthetic();
        let s = t.sigma_u();
        let mut den = CouplingSeries::zero(SeriesVar::MinusG, 4);
        den.coeffs[0] = c(1.0, 0.0);
        den.coeffs[1] = c(-1.0 / (2.0 * PI), 0.0);
        let back = s.mul(&den);
        let num = t.sigma_u_numerator();
        for k in 0..=4 {
            assert!((back.coeffs[k] - num.coeffs[k]).norm() < 1e-17);
        }
        // Leading term: 2 Γ_{2,1} (−g)³.
        assert_relative_eq!(s.coeffs[3].re, 2.0 * 0.004, max_relative = 1e-14);
        let z = CoefficientTable::from_values(vec![Estimate::default(); 5], vec![Estimate::default(); 5]);
        assert!(z.sigma_u().coeffs.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn gamma2_anchors() {
        let t = synthetic();
        let g2 = t.gamma2_series();
        assert!((g2.coeffs[0] - 1.0).norm() < 1e-15);
        assert!(g2.coeffs[1].norm() < 1e-15);
        let expect = -(0.02 + t.sigma_u().coeffs[2].re);
        assert_relative_eq!(g2.coeffs[2].re, expect, max_relative = 1e-14);
        let back = g2.mul(&t.g2_series());
        assert!((back.coeffs[0] - 1.0).norm() < 1e-15);
        assert!((1..=4).all(|k| back.coeffs[k].norm() < 1e-15));
    }

    #[test]
    fn vacuum_coefficient_vanishes() {
        for r in 2..=3 {
            assert_eq!(vacuum_m0_coefficient(r).unwrap(), num_rational::BigRational::from_integer(0.into()));
        }
    }
}
