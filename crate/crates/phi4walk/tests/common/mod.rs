//! Oracles shared by the integration tests.  Each is written independently of
//! the library code it checks.

#![allow(dead_code)]

use phi4walk::graph::BalancedMatrix;

/// Apéry's constant from the central-binomial series
/// `ζ(3) = 5/2 Σ_{n≥1} (−1)^{n+1} / (n³ C(2n,n))`.
pub fn zeta3() -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0_f64;
    for n in 1..40u32 {
        let nf = f64::from(n);
        binom *= 2.0 * (2.0 * nf - 1.0) / nf;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign / (nf * nf * nf * binom);
    }
    2.5 * sum
}

/// `∫_{R²} G(x)⁴ d²x` for the unit-mass planar propagator
/// `G(x) = K₀(|x|)/2π`, from the Bessel moment `∫₀^∞ r K₀(r)⁴ dr = 7ζ(3)/8`.
/// This is the two-loop-leg vacuum "banana" coefficient with four
/// propagators, i.e. the order-two free-energy coefficient at `m¹`.
pub fn banana_coefficient() -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    two_pi * (7.0 * zeta3() / 8.0) / two_pi.powi(4)
}

/// Counts Euler circuits of the multigraph of `f` (parallel arcs
/// distinguishable, circuits up to rotation) by enumerating every closed arc
/// sequence that uses each arc once, from every starting arc, and dividing by
/// the number of arcs.
pub fn euler_circuits_oracle(f: &BalancedMatrix) -> u64 {
    let q = f.q();
    let mut arcs = Vec::new();
    for i in 0..q {
        for j in 0..q {
            for _ in 0..f.get(i, j) {
                arcs.push((i, j));
            }
        }
    }
    if arcs.is_empty() {
        return 0;
    }
    fn extend(arcs: &[(usize, usize)], used: &mut [bool], at: usize, start: usize, left: usize) -> u64 {
        if left == 0 {
            return u64::from(at == start);
        }
        let mut total = 0;
        for k in 0..arcs.len() {
            if !used[k] && arcs[k].0 == at {
                used[k] = true;
                total += extend(arcs, used, arcs[k].1, start, left - 1);
                used[k] = false;
            }
        }
        total
    }
    let mut used = vec![false; arcs.len()];
    let mut sequences = 0;
    for k in 0..arcs.len() {
        used[k] = true;
        sequences += extend(&arcs, &mut used, arcs[k].1, arcs[k].0, arcs.len() - 1);
        used[k] = false;
    }
    sequences / arcs.len() as u64
}

/// Number of closed walks of length `2n` on `Z²`: `C(2n, n)²`.
pub fn closed_walk_count(n: u64) -> u64 {
    let c = (1..=n).fold(1u64, |acc, k| acc * (n + k) / k);
    c * c
}
