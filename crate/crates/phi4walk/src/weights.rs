//! Weight polynomials of Wick pairings.
//!
//! For `F ∈ MF(r, p, 1)` with `tu = dias(F)` the edge slots `0..R+p`
//! (`R = Σ_{k<r} tu_k`) are grouped by vertex: slots `D_{i-1}..D_i` belong to
//! inner vertex `i`, slot `R + k` to outer vertex `r + k`.  A pairing is a
//! permutation `σ` of the slots; slot `b` is the edge `qa(b) → qa(σ(b))`.
//! The weight set `WS(F)` contains the loop-free, admissible, connected
//! pairings whose adjacency matrix is `F`, and
//!
//! ```text
//! wei_F(m, p) = Σ_{σ ∈ WS(F)} m^{cycn(σ) − p}.
//! ```
//!
//! [`wei_bruteforce`] enumerates `WS(F)` literally; [`wei_partition`] uses
//! the closed partition formula
//!
//! ```text
//! a_{F,p,j} = (1/j!) Σ_{τ ∈ Partc(F,p,j)} Mud(F) · Π_α Eul(τ_α) / Mult(τ_α),
//! wei_F(m, p) = Σ_j a_{F,p,j} m^{j−p},
//! ```
//!
//! evaluated over unordered partitions weighted by `1/Sym(τ)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::graph::{euler_count, factorial, BalancedMatrix};

/// Largest `Sum(F) + p` accepted by [`wei_bruteforce`].
pub const BRUTE_FORCE_MAX_SLOTS: u32 = 9;
/// Largest number of candidate sub-matrices examined by [`wei_partition`].
pub const PARTITION_CANDIDATE_BUDGET: u64 = 1_000_000;
/// Largest number of partitions visited by [`wei_partition`].
pub const PARTITION_BUDGET: u64 = 50_000_000;

/// Polynomial (Laurent in general) in `m` with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MPolynomial {
    terms: BTreeMap<i32, BigRational>,
}

impl MPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Adds `c · m^power`.
    pub fn add_term(&mut self, power: i32, c: BigRational) {
        let entry = self.terms.entry(power).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&power);
        }
    }

    /// Coefficient of `m^power` (zero when absent).
    pub fn coeff(&self, power: i32) -> BigRational {
        self.terms.get(&power).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Non-zero terms in increasing power order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &BigRational)> {
        self.terms.iter().map(|(&k, v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_power(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    /// Whether every coefficient is an integer.
    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// Evaluates at a real `m`.
    pub fn eval(&self, m: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&k, c)| ratio_to_f64(c) * m.powi(k))
            .sum()
    }
}

pub(crate) fn ratio_to_f64(c: &BigRational) -> f64 {
    c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for MPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (&k, c)) in self.terms.iter().rev().enumerate() {
            let (sign, mag) = if c.is_negative() { ("-", -c.clone()) } else { ("+", c.clone()) };
            match (n, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            let mono = match k {
                0 => String::new(),
                1 => "m".to_string(),
                _ => format!("m^{k}"),
            };
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}{mono}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for MPolynomial {
    /// Serialises as `{"power": "coefficient", …}` with exact rationals.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, String> = self
            .terms
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        map.serialize(s)
    }
}

/// `Mud(F) = Π_{k<r} dias(F)_k!` (outer indices contribute `1! = 1`).
pub fn mud(f: &BalancedMatrix) -> BigInt {
    f.dias().iter().fold(BigInt::one(), |acc, &d| acc * factorial(d))
}

/// `Mult(F) = Π_{i,j} F_{i,j}!`.
pub fn mult(f: &BalancedMatrix) -> BigInt {
    f.entries().iter().fold(BigInt::one(), |acc, &x| acc * factorial(x))
}

fn check_input(f: &BalancedMatrix, p: usize) -> Result<usize> {
    if p > 1 {
        return domain("weights support p ∈ {0, 1} only");
    }
    if f.q() <= p || !f.in_mf(f.q() - p, p, 1) {
        return domain(format!("matrix is not in MF(r,{p},1)"));
    }
    Ok(f.q() - p)
}

/// Number of cycles of a permutation given as an image vector.
pub fn cycle_count(sigma: &[usize]) -> usize {
    let mut seen = vec![false; sigma.len()];
    let mut cycles = 0;
    for start in 0..sigma.len() {
        if !seen[start] {
            cycles += 1;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = sigma[k];
            }
        }
    }
    cycles
}

/// Slot → vertex map `qa_tu` for `tu = dias(F)` (outer slots last).
pub fn slot_owner(f: &BalancedMatrix) -> Vec<usize> {
    f.dias()
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat(v).take(d as usize))
        .collect()
}

/// Calls `visit` for every `σ ∈ WS(F)` (as a slot image vector).
///
/// Slots are processed in order; each is sent to an unused slot of a
/// different vertex while the partial adjacency stays entrywise below `F`.
pub fn for_each_pairing(f: &BalancedMatrix, mut visit: impl FnMut(&[usize])) {
    let owner = slot_owner(f);
    let n = owner.len();
    let q = f.q();
    let mut sigma = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut counts = vec![0u32; q * q];
    fn rec(
        k: usize,
        f: &BalancedMatrix,
        owner: &[usize],
        sigma: &mut [usize],
        used: &mut [bool],
        counts: &mut [u32],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if k == owner.len() {
            visit(sigma);
            return;
        }
        let q = f.q();
        let a = owner[k];
        for t in 0..owner.len() {
            let b = owner[t];
            if used[t] || a == b || counts[a * q + b] >= f.get(a, b) {
                continue;
            }
            used[t] = true;
            counts[a * q + b] += 1;
            sigma[k] = t;
            rec(k + 1, f, owner, sigma, used, counts, visit);
            counts[a * q + b] -= 1;
            used[t] = false;
        }
    }
    rec(0, f, &owner, &mut sigma, &mut used, &mut counts, &mut visit);
}

/// `wei_F(m, p)` by explicit enumeration of `WS(F)`.
pub fn wei_bruteforce(f: &BalancedMatrix, p: usize) -> Result<MPolynomial> {
    check_input(f, p)?;
    let slots = f.sum();
    if slots > BRUTE_FORCE_MAX_SLOTS {
        return Err(Error::Budget {
            what: "wei_bruteforce (Sum(F) + p)",
            attempted: u64::from(slots),
            limit: u64::from(BRUTE_FORCE_MAX_SLOTS),
        });
    }
    let mut by_cycles: BTreeMap<usize, u64> = BTreeMap::new();
    for_each_pairing(f, |sigma| {
        *by_cycles.entry(cycle_count(sigma)).or_default() += 1;
    });
    let mut poly = MPolynomial::zero();
    for (c, n) in by_cycles {
        poly.add_term(c as i32 - p as i32, BigRational::from_integer(BigInt::from(n)));
    }
    Ok(poly)
}

/// Enumerates the admissible connected parts: non-zero balanced matrices
/// `P ≤ F` with `Eul(P) ≠ 0` and at most one unit of outer degree.
fn candidate_parts(f: &BalancedMatrix, r: usize) -> Result<Vec<(BalancedMatrix, BigRational)>> {
    let q = f.q();
    let total: u64 = f
        .entries()
        .iter()
        .try_fold(1u64, |acc, &x| acc.checked_mul(u64::from(x) + 1))
        .unwrap_or(u64::MAX);
    if total > PARTITION_CANDIDATE_BUDGET {
        return Err(Error::Budget {
            what: "wei_partition candidate parts",
            attempted: total,
            limit: PARTITION_CANDIDATE_BUDGET,
        });
    }
    let positions: Vec<usize> = (0..q * q).filter(|&k| f.entries()[k] > 0).collect();
    let mut out = Vec::new();
    let mut cur = BalancedMatrix::zeros(q);
    fn rec(
        idx: usize,
        positions: &[usize],
        f: &BalancedMatrix,
        r: usize,
        cur: &mut BalancedMatrix,
        out: &mut Vec<(BalancedMatrix, BigRational)>,
    ) {
        let q = f.q();
        if idx == positions.len() {
            if cur.is_zero() || !cur.is_balanced() {
                return;
            }
            let outer_degree: u32 = cur.dias()[r..].iter().sum();
            if outer_degree > 1 {
                return;
            }
            let eul = euler_count(cur).expect("balanced non-zero part");
            if !eul.is_zero() {
                let w = BigRational::new(eul, mult(cur));
                out.push((cur.clone(), w));
            }
            return;
        }
        let pos = positions[idx];
        let (i, j) = (pos / q, pos % q);
        for v in 0..=f.get(i, j) {
            cur.set(i, j, v);
            rec(idx + 1, positions, f, r, cur, out);
        }
        cur.set(i, j, 0);
    }
    rec(0, &positions, f, r, &mut cur, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// One unordered admissible partition of `F` and its weight contribution.
#[derive(Clone, Debug)]
pub struct PartitionTerm {
    pub parts: Vec<BalancedMatrix>,
    /// `Sym(τ)`: product of factorials of part multiplicities.
    pub sym: BigInt,
    /// `Mud(F) · Π Eul/Mult / Sym(τ)`.
    pub weight: BigRational,
}

/// Lists the unordered admissible partitions `Part(F, p, ·)` with weights.
pub fn partitions(f: &BalancedMatrix, p: usize) -> Result<Vec<PartitionTerm>> {
    let r = check_input(f, p)?;
    let cands = candidate_parts(f, r)?;
    let mud_f = BigRational::from_integer(mud(f));
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    let mut visited = 0u64;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        start: usize,
        rest: &mut BalancedMatrix,
        cands: &[(BalancedMatrix, BigRational)],
        chosen: &mut Vec<usize>,
        mud_f: &BigRational,
        visited: &mut u64,
        out: &mut Vec<PartitionTerm>,
    ) -> Result<()> {
        *visited += 1;
        if *visited > PARTITION_BUDGET {
            return Err(Error::Budget {
                what: "wei_partition partitions",
                attempted: *visited,
                limit: PARTITION_BUDGET,
            });
        }
        if rest.is_zero() {
            let mut sym = BigInt::one();
            let mut run = 1u32;
            for w in chosen.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                    sym *= BigInt::from(run);
                } else {
                    run = 1;
                }
            }
            let mut weight = mud_f.clone();
            for &c in chosen.iter() {
                weight *= &cands[c].1;
            }
            weight /= BigRational::from_integer(sym.clone());
            out.push(PartitionTerm {
                parts: chosen.iter().map(|&c| cands[c].0.clone()).collect(),
                sym,
                weight,
            });
            return Ok(());
        }
        // The part containing the first remaining edge must be chosen now in
        // some canonical way; restricting to non-decreasing candidate index
        // gives each multiset exactly once.
        for c in start..cands.len() {
            let part = &cands[c].0;
            if !part.le(rest) {
                continue;
            }
            subtract(rest, part, false);
            chosen.push(c);
            rec(c, rest, cands, chosen, mud_f, visited, out)?;
            chosen.pop();
            subtract(rest, part, true);
        }
        Ok(())
    }
    let mut rest = f.clone();
    rec(0, &mut rest, &cands, &mut chosen, &mud_f, &mut visited, &mut out)?;
    Ok(out)
}

fn subtract(rest: &mut BalancedMatrix, part: &BalancedMatrix, undo: bool) {
    let q = rest.q();
    for i in 0..q {
        for j in 0..q {
            let v = part.get(i, j);
            if v > 0 {
                let cur = rest.get(i, j);
                rest.set(i, j, if undo { cur + v } else { cur - v });
            }
        }
    }
}

/// `wei_F(m, p)` by the partition formula.
pub fn wei_partition(f: &BalancedMatrix, p: usize) -> Result<MPolynomial> {
    let mut poly = MPolynomial::zero();
    for term in partitions(f, p)? {
        poly.add_term(term.parts.len() as i32 - p as i32, term.weight);
    }
    Ok(poly)
}

/// Closed form of the `m¹` coefficient for `F ∈ H_r(2,…,2)`:
/// `2^r · cof(Diag(F) − F) / Π F_{i,j}!`.
pub fn a1_closed(f: &BalancedMatrix) -> Result<BigRational> {
    f.require_balanced()?;
    if f.q() == 0 || f.dias().iter().any(|&d| d != 2) {
        return domain("a1_closed needs all row sums equal to 2");
    }
    let num = (BigInt::one() << f.q()) * f.laplacian_cofactor();
    Ok(BigRational::new(num, mult(f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{div, enumerate_mf};

    fn m(rows: &[&[u32]]) -> BalancedMatrix {
        BalancedMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn poly(terms: &[(i32, i64)]) -> MPolynomial {
        let mut p = MPolynomial::zero();
        for &(k, c) in terms {
            p.add_term(k, BigRational::from_integer(c.into()));
        }
        p
    }

    #[test]
    fn banana_weight() {
        let f = m(&[&[0, 2], &[2, 0]]);
        let expected = poly(&[(2, 2), (1, 2)]);
        assert_eq!(wei_bruteforce(&f, 0).unwrap(), expected);
        assert_eq!(wei_partition(&f, 0).unwrap(), expected);
        assert_eq!(expected.to_string(), "2m^2 + 2m");
    }

    #[test]
    fn banana_pairings_listed() {
        // Slots 0,1 at vertex 0 and 2,3 at vertex 1: the four pairings are
        // (0→2,1→3,2→0,3→1), (0→2,1→3,2→1,3→0), (0→3,1→2,2→0,3→1), (0→3,1→2,2→1,3→0).
        let mut all = Vec::new();
        for_each_pairing(&m(&[&[0, 2], &[2, 0]]), |s| all.push((s.to_vec(), cycle_count(s))));
        assert_eq!(
            all,
            vec![
                (vec![2, 3, 0, 1], 2),
                (vec![2, 3, 1, 0], 1),
                (vec![3, 2, 0, 1], 1),
                (vec![3, 2, 1, 0], 2),
            ]
        );
    }

    #[test]
    fn three_cycle_weight() {
        let f = m(&[&[0, 1, 0], &[0, 0, 1], &[1, 0, 0]]);
        assert_eq!(wei_partition(&f, 0).unwrap(), poly(&[(1, 1)]));
        assert_eq!(wei_bruteforce(&f, 0).unwrap(), poly(&[(1, 1)]));
    }

    #[test]
    fn pairing_count_is_mud_squared_over_mult() {
        for f in enumerate_mf(3, 0, 2, 2).unwrap() {
            let mut n = 0u64;
            for_each_pairing(&f, |_| n += 1);
            let expect = mud(&f) * mud(&f) / mult(&f);
            assert_eq!(BigInt::from(n), expect);
        }
    }

    #[test]
    fn subdivided_banana_oracle_equivalence() {
        let h = div(&m(&[&[0, 2], &[2, 0]]), 0, 1).unwrap();
        assert_eq!(wei_partition(&h, 1).unwrap(), wei_bruteforce(&h, 1).unwrap());
    }

    #[test]
    fn a1_matches_banana() {
        let f = m(&[&[0, 2], &[2, 0]]);
        assert_eq!(a1_closed(&f).unwrap(), BigRational::from_integer(2.into()));
        assert!(a1_closed(&m(&[&[0, 3], &[3, 0]])).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(wei_partition(&m(&[&[0, 1], &[0, 0]]), 0).is_err());
        let big = m(&[&[0, 5], &[5, 0]]);
        assert!(matches!(wei_bruteforce(&big, 0), Err(Error::Budget { .. })));
    }
}
