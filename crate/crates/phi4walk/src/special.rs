//! Special functions: complex Γ and 1/Γ, real polygamma, Hurwitz ζ, ζ values,
//! and derivatives of Γ on the positive real axis.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Bernoulli numbers `B_{2k}` for `k = 1..=15`.
const BERNOULLI_2K: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// `ln Γ(z)` for `Re z ≥ 1/2` (Lanczos approximation, principal branch of
/// the logarithm applied piecewise).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `ln sin(πz)` evaluated without overflow for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = PI * z;
    let i = Complex64::i();
    if w.im > 20.0 {
        -i * w + ((1.0 - (2.0 * i * w).exp()) * i / 2.0).ln()
    } else if w.im < -20.0 {
        i * w + ((1.0 - (-2.0 * i * w).exp()) / (2.0 * i)).ln()
    } else {
        w.sin().ln()
    }
}

/// A logarithm of `Γ(z)` (exponentiates to `Γ(z)`; the branch is not the
/// continuous one).  Infinite at the poles `z ∈ {0, −1, −2, …}`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        ln_gamma_right(z)
    } else {
        Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_right(1.0 - z)
    }
}

/// `Γ(z)` for complex `z`.
pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// `1/Γ(z)`, entire; exactly zero at non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else if z.im == 0.0 && z.re == z.re.round() {
        Complex64::new(0.0, 0.0)
    } else if (PI * z.im).abs() > 20.0 {
        (ln_sin_pi(z) - PI.ln() + ln_gamma_right(1.0 - z)).exp()
    } else {
        (PI * z).sin() / PI * ln_gamma_right(1.0 - z).exp()
    }
}

/// Real `Γ(x)`.
pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

/// Real `ln Γ(x)` for `x > 0`.
pub fn ln_gamma_real(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma_real needs x > 0");
    if x >= 0.5 {
        ln_gamma_right(Complex64::new(x, 0.0)).re
    } else {
        (PI / (PI * x).sin()).ln() - ln_gamma_right(Complex64::new(1.0 - x, 0.0)).re
    }
}

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (a + k)^{−s}` for real `s > 1`, `a > 0`
/// (direct summation followed by Euler–Maclaurin).
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1 and a > 0");
    let shift = 16usize.saturating_sub(a.floor() as usize);
    let mut sum = 0.0;
    for k in 0..shift {
        sum += (a + k as f64).powf(-s);
    }
    let b = a + shift as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // Σ_j B_{2j}/(2j)! · s(s+1)…(s+2j−2) · b^{−s−2j+1}
    let mut rising = s; // s(s+1)…(s+2j−2)
    let mut fact = 2.0; // (2j)!
    let mut pow = b.powf(-s - 1.0);
    for (j, &b2j) in BERNOULLI_2K.iter().enumerate() {
        let term = b2j / fact * rising * pow;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let jj = (j + 1) as f64;
        rising *= (s + 2.0 * jj - 1.0) * (s + 2.0 * jj);
        fact *= (2.0 * jj + 1.0) * (2.0 * jj + 2.0);
        pow /= b * b;
    }
    sum
}

/// Riemann `ζ(s)` for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// Digamma `ψ(x)` for real `x` away from the poles.
pub fn digamma(x: f64) -> f64 {
    if x <= 0.0 {
        // ψ(1 − x) − ψ(x) = π cot(πx)
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 16.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    let mut pow = x2;
    let mut tail = 0.0;
    for (k, &b) in BERNOULLI_2K.iter().enumerate().take(10) {
        tail += b / (2.0 * (k + 1) as f64) * pow;
        pow *= x2;
    }
    acc + x.ln() - 0.5 / x - tail
}

/// Polygamma `ψ^{(n)}(x)` for real `x > 0`.
pub fn polygamma(n: u32, x: f64) -> f64 {
    if n == 0 {
        return digamma(x);
    }
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    sign * factorial_f64(n) * hurwitz_zeta(f64::from(n) + 1.0, x)
}

/// `n!` as a float.
pub fn factorial_f64(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Binomial coefficient as a float.
pub fn binomial_f64(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).map(|i| f64::from(n - i) / f64::from(i + 1)).product()
}

/// Exponential of a power series with zero constant term:
/// returns `e` with `exp(Σ_{k≥1} l_k h^k) = Σ_k e_k h^k`.
pub fn exp_series(l: &[f64], order: usize) -> Vec<f64> {
    let mut e = vec![0.0; order + 1];
    e[0] = 1.0;
    for n in 1..=order {
        let mut s = 0.0;
        for k in 1..=n.min(l.len().saturating_sub(1)) {
            s += k as f64 * l[k] * e[n - k];
        }
        e[n] = s / n as f64;
    }
    e
}

/// `[Γ(x), Γ'(x), …, Γ^{(n)}(x)]` for real `x > 0`, from the Taylor series
/// of `ln Γ` (polygamma values) and a series exponential.
pub fn gamma_derivatives(x: f64, n: usize) -> Vec<f64> {
    assert!(x > 0.0, "gamma_derivatives needs x > 0");
    let mut l = vec![0.0; n + 1];
    for (k, lk) in l.iter_mut().enumerate().skip(1) {
        *lk = polygamma(k as u32 - 1, x) / factorial_f64(k as u32);
    }
    let e = exp_series(&l, n);
    let g = gamma_real(x);
    e.iter()
        .enumerate()
        .map(|(k, &ek)| g * ek * factorial_f64(k as u32))
        .collect()
}

/// Modified Bessel function `K_0(x)` for `x > 0`.
pub fn bessel_k0(x: f64) -> f64 {
    puruspe::Kn(0, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma_real(5.0), 24.0, max_relative = 1e-13);
        assert_relative_eq!(gamma_real(0.5), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma_real(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-13);
        // Γ(i) = −0.15494982830181069 − 0.49801566811835604 i
        let g = gamma(c(0.0, 1.0));
        assert_relative_eq!(g.re, -0.154_949_828_301_810_69, max_relative = 1e-12);
        assert_relative_eq!(g.im, -0.498_015_668_118_356_04, max_relative = 1e-12);
    }

    #[test]
    fn rgamma_poles_and_large_imaginary_part() {
        assert_eq!(rgamma(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(rgamma(c(-3.0, 0.0)), c(0.0, 0.0));
        for z in [c(-2.3, 30.0), c(0.2, -40.0), c(1.5, 25.0)] {
            let prod = rgamma(z) * gamma(z);
            assert_relative_eq!(prod.re, 1.0, max_relative = 1e-10);
            assert!(prod.im.abs() < 1e-10);
        }
        // Recurrence 1/Γ(z) = z/Γ(z+1) across the reflection boundary.
        let z = c(0.3, 7.0);
        let lhs = rgamma(z);
        let rhs = z * rgamma(z + 1.0);
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm());
    }

    #[test]
    fn zeta_and_polygamma_values() {
        assert_relative_eq!(zeta(2.0), PI * PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(zeta(3.0), 1.202_056_903_159_594_3, max_relative = 1e-14);
        assert_relative_eq!(digamma(1.0), -EULER_GAMMA, max_relative = 1e-14);
        assert_relative_eq!(digamma(0.5), -EULER_GAMMA - 2.0 * 2f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(polygamma(1, 1.0), PI * PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(polygamma(2, 1.0), -2.0 * zeta(3.0), max_relative = 1e-14);
    }

    #[test]
    fn gamma_derivatives_match_finite_differences() {
        let d = gamma_derivatives(1.0, 2);
        assert_relative_eq!(d[1], -EULER_GAMMA, max_relative = 1e-13);
        // Γ''(1) = γ² + π²/6
        assert_relative_eq!(d[2], EULER_GAMMA * EULER_GAMMA + PI * PI / 6.0, max_relative = 1e-13);
        let d2 = gamma_derivatives(2.0, 1);
        assert_relative_eq!(d2[1], 1.0 - EULER_GAMMA, max_relative = 1e-13);
    }

    #[test]
    fn k0_value() {
        assert_relative_eq!(bessel_k0(1.0), 0.421_024_438_240_708_3, max_relative = 1e-10);
    }
}
