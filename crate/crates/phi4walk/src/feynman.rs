//! Kirchhoff–Symanzik polynomials and the d = 2 parametric integrals
//!
//! ```text
//! Γ_G(0) = ∫_{[0,∞)^E} e^{−Σα} / 𝒫_G(α) dα,   𝒫_G(α) = Σ_{T ∈ sp(G)} Π_{e ∉ T} α_e.
//! ```
//!
//! Evaluation strategy:
//!
//! 1. Legs (edges ending in a degree-one vertex) belong to every spanning
//!    tree, so their `α` integrates to one; they are stripped first.
//! 2. Primary sectors: in the sector where `α_i` is the largest parameter,
//!    `α_j = α_i x_j` gives
//!    `Γ_G(0) = Γ(V−1) Σ_i ∫_{[0,1]^{E−1}} D_i(x)^{−(V−1)} / 𝒫_G(x)|_{x_i=1}`
//!    with `D_i = 1 + Σ_{j≠i} x_j`.
//! 3. Iterated sector decomposition splits each primary sector until the
//!    polynomial in the denominator has a constant term, leaving bounded
//!    integrands `t^a / P(t) · D(t)^{−(V−1)}` with `a ≥ 0`.
//! 4. The sector integrals are evaluated by tensor Gauss–Legendre; this is
//!    the deterministic reference for small graphs.
//! 5. The production estimator is tropical importance sampling over Hepp
//!    sectors (see [`gamma_g0_mc`]), which needs no iterated decomposition
//!    and has a weight bounded by one.
//!
//! A third, independent estimator works in position space, sampling the
//! vertex positions along a spanning tree from the normalised propagator
//! `K_0(|x|)/(2π)`.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::graph::{canonical_form, BalancedMatrix, DirectedMultigraph, VertexKind};
use crate::quad::{gauss_legendre_01, Method, QuadratureResult};
use crate::special::{bessel_k0, gamma_real};

/// Largest number of edges accepted after leg stripping.
pub const MAX_EDGES: usize = 24;
/// Depth cap for iterated sector decomposition.
pub const MAX_SECTOR_DEPTH: usize = 24;

/// Undirected view of a graph: vertex count and edge endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeynmanGraph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl FeynmanGraph {
    pub fn from_directed(g: &DirectedMultigraph) -> Self {
        Self {
            n_vertices: g.n_vertices(),
            edges: g.edges().to_vec(),
        }
    }

    pub fn loop_number(&self) -> usize {
        self.edges.len() + 1 - self.n_vertices
    }

    /// Repeatedly removes vertices of total degree one together with their
    /// edge, returning the reduced graph and the number of removed legs.
    pub fn strip_legs(&self) -> (FeynmanGraph, usize) {
        let mut alive = vec![true; self.n_vertices];
        let mut edges = self.edges.clone();
        let mut removed = 0;
        loop {
            let mut deg = vec![0usize; self.n_vertices];
            for &(a, b) in &edges {
                deg[a] += 1;
                deg[b] += 1;
            }
            let leaf = (0..self.n_vertices).find(|&v| alive[v] && deg[v] == 1);
            match leaf {
                Some(v) => {
                    alive[v] = false;
                    edges.retain(|&(a, b)| a != v && b != v);
                    removed += 1;
                }
                None => break,
            }
        }
        let mut map = vec![usize::MAX; self.n_vertices];
        let mut n = 0;
        for v in 0..self.n_vertices {
            if alive[v] {
                map[v] = n;
                n += 1;
            }
        }
        let edges = edges.iter().map(|&(a, b)| (map[a], map[b])).collect();
        (FeynmanGraph { n_vertices: n, edges }, removed)
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.n_vertices);
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        (0..self.n_vertices).all(|v| uf.find(v) == uf.find(0))
    }

    /// Canonical key for caching: the minimum relabelled symmetric
    /// adjacency matrix (the integrals ignore edge directions).
    pub fn canonical_key(&self) -> BalancedMatrix {
        let mut m = BalancedMatrix::zeros(self.n_vertices);
        for &(a, b) in &self.edges {
            m.set(a, b, m.get(a, b) + 1);
            m.set(b, a, m.get(b, a) + 1);
        }
        canonical_form(&m, self.n_vertices, 0)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// `𝒫_G` as a set of monomials; each monomial is the bit mask of the edges
/// not in a spanning tree (all coefficients are one).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymanzikPolynomial {
    pub n_edges: usize,
    pub monomials: Vec<u32>,
}

impl SymanzikPolynomial {
    /// Degree `L(G)` of every monomial.
    pub fn degree(&self) -> usize {
        self.monomials.first().map_or(0, |m| m.count_ones() as usize)
    }

    pub fn eval(&self, alpha: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|&mask| {
                (0..self.n_edges)
                    .filter(|e| mask >> e & 1 == 1)
                    .map(|e| alpha[e])
                    .product::<f64>()
            })
            .sum()
    }
}

/// Enumerates spanning trees of a connected graph (edge directions ignored).
pub fn symanzik_of(g: &FeynmanGraph) -> Result<SymanzikPolynomial> {
    if !g.is_connected() {
        return domain("Symanzik polynomial needs a connected graph");
    }
    let e = g.edges.len();
    if e > MAX_EDGES {
        return Err(Error::Budget {
            what: "symanzik (edges)",
            attempted: e as u64,
            limit: MAX_EDGES as u64,
        });
    }
    let need = g.n_vertices - 1;
    let mut monomials = Vec::new();
    let full: u32 = if e == 32 { u32::MAX } else { (1u32 << e) - 1 };
    let mut chosen = Vec::with_capacity(need);
    fn rec(
        start: usize,
        need: usize,
        g: &FeynmanGraph,
        chosen: &mut Vec<usize>,
        full: u32,
        out: &mut Vec<u32>,
    ) {
        if chosen.len() == need {
            let mut uf = UnionFind::new(g.n_vertices);
            if chosen.iter().all(|&k| uf.union(g.edges[k].0, g.edges[k].1)) {
                let tree: u32 = chosen.iter().map(|&k| 1u32 << k).sum();
                out.push(full & !tree);
            }
            return;
        }
        let remaining = need - chosen.len();
        for k in start..=g.edges.len() - remaining {
            chosen.push(k);
            rec(k + 1, need, g, chosen, full, out);
            chosen.pop();
        }
    }
    rec(0, need, g, &mut chosen, full, &mut monomials);
    monomials.sort_unstable();
    Ok(SymanzikPolynomial { n_edges: e, monomials })
}

/// `𝒫_G` of a directed multigraph.
pub fn symanzik(g: &DirectedMultigraph) -> Result<SymanzikPolynomial> {
    symanzik_of(&FeynmanGraph::from_directed(g))
}

/// Multivariate polynomial with positive coefficients.
#[derive(Clone, Debug, PartialEq)]
struct Poly {
    terms: Vec<(f64, Vec<u16>)>,
}

impl Poly {
    fn normalise(mut self) -> Self {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<(f64, Vec<u16>)> = Vec::with_capacity(self.terms.len());
        for (c, e) in self.terms {
            match out.last_mut() {
                Some(last) if last.1 == e => last.0 += c,
                _ => out.push((c, e)),
            }
        }
        Poly { terms: out }
    }

    fn has_constant(&self) -> bool {
        self.terms.iter().any(|(_, e)| e.iter().all(|&k| k == 0))
    }

    /// Substitutes `t_j → t_k t_j` for `j ∈ set ∖ {k}` and divides by the
    /// largest power of `t_k`; returns the new polynomial and that power.
    fn blow_up(&self, set: &[usize], k: usize) -> (Poly, u16) {
        let mut terms: Vec<(f64, Vec<u16>)> = self
            .terms
            .iter()
            .map(|(c, e)| {
                let mut e2 = e.clone();
                e2[k] = set.iter().map(|&j| e[j]).sum();
                (*c, e2)
            })
            .collect();
        let m = terms.iter().map(|(_, e)| e[k]).min().unwrap_or(0);
        for t in terms.iter_mut() {
            t.1[k] -= m;
        }
        (Poly { terms }.normalise(), m)
    }

    fn eval(&self, pows: &[Vec<f64>]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                let mut v = *c;
                for (j, &k) in e.iter().enumerate() {
                    if k > 0 {
                        v *= pows[j][k as usize];
                    }
                }
                v
            })
            .sum()
    }

    fn max_exponent(&self) -> u16 {
        self.terms.iter().flat_map(|(_, e)| e.iter().copied()).max().unwrap_or(0)
    }
}

/// One bounded sector integrand `t^a / P(t) · D(t)^{−κ}` on `[0,1]^n`.
#[derive(Clone, Debug)]
pub struct Sector {
    a: Vec<u16>,
    p: Poly,
    d: Poly,
    kappa: i32,
    max_pow: usize,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Evaluates the sector integrand at `t ∈ [0,1]^n`.
    pub fn eval(&self, t: &[f64], pows: &mut Vec<Vec<f64>>) -> f64 {
        let n = t.len();
        pows.resize(n, Vec::new());
        for j in 0..n {
            let row = &mut pows[j];
            row.clear();
            let mut v = 1.0;
            for _ in 0..=self.max_pow {
                row.push(v);
                v *= t[j];
            }
        }
        let mut num = 1.0;
        for j in 0..n {
            if self.a[j] > 0 {
                num *= pows[j][self.a[j] as usize];
            }
        }
        num / self.p.eval(pows) * self.d.eval(pows).powi(-self.kappa)
    }
}

/// Sector decomposition of `Γ_G(0)`: `Γ_G(0) = prefactor · Σ_s ∫ sector_s`.
#[derive(Clone, Debug)]
pub struct SectorDecomposition {
    pub prefactor: f64,
    pub sectors: Vec<Sector>,
    /// Set when the reduced graph has no loops (`𝒫 = 1`, `Γ = 1`).
    pub trivial: bool,
}

/// Builds the sector decomposition of a connected graph (legs stripped).
pub fn decompose(g: &FeynmanGraph) -> Result<SectorDecomposition> {
    let (core, _) = g.strip_legs();
    let sym = symanzik_of(&core)?;
    let e = core.edges.len();
    let v = core.n_vertices;
    if sym.degree() == 0 {
        return Ok(SectorDecomposition {
            prefactor: 1.0,
            sectors: Vec::new(),
            trivial: true,
        });
    }
    let kappa = (v - 1) as i32;
    let mut sectors = Vec::new();
    for i in 0..e {
        let vars: Vec<usize> = (0..e).filter(|&j| j != i).collect();
        let p = Poly {
            terms: sym
                .monomials
                .iter()
                .map(|&mask| (1.0, vars.iter().map(|&j| (mask >> j & 1) as u16).collect()))
                .collect(),
        }
        .normalise();
        let mut d_terms = vec![(1.0, vec![0u16; e - 1])];
        for k in 0..e - 1 {
            let mut ex = vec![0u16; e - 1];
            ex[k] = 1;
            d_terms.push((1.0, ex));
        }
        let d = Poly { terms: d_terms }.normalise();
        let mut local = Vec::new();
        if refine(vec![0; e - 1], p.clone(), d.clone(), kappa, 0, Strategy::MinimalSet, &mut local).is_err() {
            local.clear();
            refine(vec![0; e - 1], p, d, kappa, 0, Strategy::FullSupport, &mut local)?;
        }
        sectors.extend(local);
    }
    Ok(SectorDecomposition {
        prefactor: gamma_real(f64::from(kappa)),
        sectors,
        trivial: false,
    })
}

fn minimal_hitting_set(p: &Poly, n: usize) -> Option<Vec<usize>> {
    if p.has_constant() {
        return None;
    }
    for size in 1..=n {
        let mut set = Vec::with_capacity(size);
        if let Some(s) = search_subsets(p, n, size, 0, &mut set) {
            return Some(s);
        }
    }
    None
}

fn search_subsets(p: &Poly, n: usize, size: usize, start: usize, set: &mut Vec<usize>) -> Option<Vec<usize>> {
    if set.len() == size {
        let hits = p.terms.iter().all(|(_, e)| set.iter().any(|&j| e[j] > 0));
        return hits.then(|| set.clone());
    }
    for j in start..n {
        set.push(j);
        if let Some(s) = search_subsets(p, n, size, j + 1, set) {
            return Some(s);
        }
        set.pop();
    }
    None
}

/// Choice of the variable set blown up at each step of the decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Strategy {
    /// Smallest set of variables whose vanishing kills the polynomial (few
    /// sectors, but may cycle).
    MinimalSet,
    /// Every variable in the support of the polynomial (more sectors).
    FullSupport,
}

fn full_support(p: &Poly, n: usize) -> Option<Vec<usize>> {
    if p.has_constant() {
        return None;
    }
    Some((0..n).filter(|&j| p.terms.iter().any(|(_, e)| e[j] > 0)).collect())
}

fn refine(
    a: Vec<u16>,
    p: Poly,
    d: Poly,
    kappa: i32,
    depth: usize,
    strategy: Strategy,
    out: &mut Vec<Sector>,
) -> Result<()> {
    let n = a.len();
    let choice = match strategy {
        Strategy::MinimalSet => minimal_hitting_set(&p, n),
        Strategy::FullSupport => full_support(&p, n),
    };
    let Some(set) = choice else {
        let max_pow = (p.max_exponent().max(d.max_exponent()) as usize).max(a.iter().copied().max().unwrap_or(0) as usize);
        out.push(Sector { a, p, d, kappa, max_pow });
        return Ok(());
    };
    if depth >= MAX_SECTOR_DEPTH {
        return Err(Error::Numerical {
            what: "sector decomposition",
            detail: format!("depth cap {MAX_SECTOR_DEPTH} reached"),
        });
    }
    for &k in &set {
        let (p2, m) = p.blow_up(&set, k);
        let (d2, md) = d.blow_up(&set, k);
        debug_assert_eq!(md, 0);
        let mut a2 = a.clone();
        let gain: i32 = set.iter().filter(|&&j| j != k).map(|&j| i32::from(a[j]) + 1).sum::<i32>()
            + i32::from(a[k])
            - i32::from(m);
        if gain < 0 {
            return Err(Error::Numerical {
                what: "sector decomposition",
                detail: "non-integrable sector (negative exponent)".into(),
            });
        }
        a2[k] = gain as u16;
        refine(a2, p2, d2, kappa, depth + 1, strategy, out)?;
    }
    Ok(())
}

/// Monte Carlo settings.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McConfig {
    pub seed: u64,
    /// Total sample budget per integral.
    pub max_samples: u64,
    /// Target relative standard error.
    pub target_rel: f64,
    /// Pilot samples per sector.
    pub pilot: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            max_samples: 10_000_000,
            target_rel: 1e-3,
            pilot: 2_000,
        }
    }
}

/// SplitMix64 finaliser used to derive independent stream seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Largest edge count accepted by the tropical sampler (it tabulates all
/// edge subsets).
pub const MAX_TROPICAL_EDGES: usize = 20;

/// Tropical (Hepp-sector) importance sampler for
/// `Γ_G(0) = Γ(V−1) ∫ Ω / (𝒫_G(x) (Σx)^{V−1})`.
///
/// In the Hepp sector `x_{σ1} = 1 ≥ x_{σ2} ≥ … ≥ x_{σE}`, write
/// `x_{σk} = y_2 ⋯ y_k`.  Replacing `𝒫_G` by its largest monomial gives the
/// density `Π_j y_j^{ω(S_j)−1}`, where `S_j = {σ_j, …, σ_E}` and `ω` is the
/// rank (vertices touched minus components).  Its total mass `J(E)` obeys
/// `J(S) = Σ_{e∈S} J(S∖e)/ω(S∖e)`, `J({e}) = 1`.  Sampling orderings and
/// `y_j = u^{1/ω(S_j)}` from it leaves the bounded weight
/// `R = 𝒫^tr/𝒫 · (Σx)^{−(V−1)} ∈ (0, 1]`.
struct Tropical {
    n_edges: usize,
    vm1: i32,
    rank: Vec<u8>,
    j: Vec<f64>,
    monomials: Vec<u32>,
}

impl Tropical {
    fn new(g: &FeynmanGraph) -> Result<Self> {
        let e = g.edges.len();
        if e > MAX_TROPICAL_EDGES {
            return Err(Error::Budget {
                what: "tropical sampler (edges)",
                attempted: e as u64,
                limit: MAX_TROPICAL_EDGES as u64,
            });
        }
        if g.edges.iter().any(|&(a, b)| a == b) {
            return domain("self-loops make the parametric integral divergent");
        }
        let sym = symanzik_of(g)?;
        let n = 1usize << e;
        let mut rank = vec![0u8; n];
        for (mask, rk) in rank.iter_mut().enumerate() {
            let mut uf = UnionFind::new(g.n_vertices);
            *rk = (0..e)
                .filter(|&k| mask >> k & 1 == 1 && uf.union(g.edges[k].0, g.edges[k].1))
                .count() as u8;
        }
        let mut j = vec![0.0; n];
        for mask in 1..n {
            if mask.count_ones() == 1 {
                j[mask] = 1.0;
                continue;
            }
            j[mask] = (0..e)
                .filter(|&k| mask >> k & 1 == 1)
                .map(|k| {
                    let rest = mask & !(1 << k);
                    j[rest] / f64::from(rank[rest])
                })
                .sum();
        }
        Ok(Self {
            n_edges: e,
            vm1: g.n_vertices as i32 - 1,
            rank,
            j,
            monomials: sym.monomials,
        })
    }

    fn full(&self) -> usize {
        (1usize << self.n_edges) - 1
    }

    /// Stratum weights `J(E∖e)/ω(E∖e)` for the largest edge `e`.
    fn stratum_weights(&self) -> Vec<f64> {
        let full = self.full();
        (0..self.n_edges)
            .map(|k| {
                let rest = full & !(1 << k);
                self.j[rest] / f64::from(self.rank[rest])
            })
            .collect()
    }

    /// One weight `R` with the largest edge fixed to `first`.
    fn sample(&self, first: usize, rng: &mut ChaCha8Rng, logx: &mut [f64]) -> f64 {
        logx[first] = 0.0;
        let mut rest = self.full() & !(1 << first);
        let mut cum = 0.0;
        while rest != 0 {
            let u: f64 = 1.0 - rng.gen::<f64>();
            cum += u.ln() / f64::from(self.rank[rest]);
            let next = if rest.count_ones() == 1 {
                rest.trailing_zeros() as usize
            } else {
                let mut t = rng.gen::<f64>() * self.j[rest];
                let mut pick = usize::MAX;
                for k in 0..self.n_edges {
                    if rest >> k & 1 == 1 {
                        let sub = rest & !(1 << k);
                        pick = k;
                        t -= self.j[sub] / f64::from(self.rank[sub]);
                        if t < 0.0 {
                            break;
                        }
                    }
                }
                pick
            };
            logx[next] = cum;
            rest &= !(1 << next);
        }
        let mut lmax = f64::NEG_INFINITY;
        for &m in &self.monomials {
            lmax = lmax.max(mono_log(m, logx));
        }
        let ratio: f64 = self.monomials.iter().map(|&m| (mono_log(m, logx) - lmax).exp()).sum();
        let s: f64 = logx.iter().map(|l| l.exp()).sum();
        1.0 / (ratio * s.powi(self.vm1))
    }
}

fn mono_log(mut m: u32, logx: &[f64]) -> f64 {
    let mut acc = 0.0;
    while m != 0 {
        let k = m.trailing_zeros() as usize;
        acc += logx[k];
        m &= m - 1;
    }
    acc
}

#[derive(Clone, Debug)]
struct StratumStats {
    first: usize,
    rng: ChaCha8Rng,
    n: u64,
    mean: f64,
    m2: f64,
}

impl StratumStats {
    fn var(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    fn run(&mut self, t: &Tropical, extra: u64) {
        let mut logx = vec![0.0; t.n_edges];
        for _ in 0..extra {
            let f = t.sample(self.first, &mut self.rng, &mut logx);
            self.n += 1;
            let delta = f - self.mean;
            self.mean += delta / self.n as f64;
            self.m2 += delta * (f - self.mean);
        }
    }
}

fn run_all(stats: &mut [StratumStats], t: &Tropical, extra: &[u64]) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        stats
            .par_iter_mut()
            .zip(extra.par_iter())
            .for_each(|(st, &k)| st.run(t, k));
    }
    #[cfg(not(feature = "parallel"))]
    for (st, &k) in stats.iter_mut().zip(extra) {
        st.run(t, k);
    }
}

/// `Γ_G(0)` by tropical importance sampling, stratified by the largest edge
/// (Neyman allocation, one deterministic stream per stratum).
pub fn gamma_g0_mc(g: &FeynmanGraph, cfg: &McConfig) -> Result<QuadratureResult> {
    let (core, _) = g.strip_legs();
    if core.edges.is_empty() {
        return Ok(exact_one());
    }
    let trop = Tropical::new(&core)?;
    let weights = trop.stratum_weights();
    let ns = weights.len();
    let mut stats: Vec<StratumStats> = (0..ns)
        .map(|k| StratumStats {
            first: k,
            rng: ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, k as u64)),
            n: 0,
            mean: 0.0,
            m2: 0.0,
        })
        .collect();
    let pilot = cfg.pilot.max(16);
    run_all(&mut stats, &trop, &vec![pilot; ns]);
    let mut used = pilot * ns as u64;
    let (mut value, mut var) = summarize(&stats, &weights);
    while var.sqrt() > cfg.target_rel * value.abs() && used < cfg.max_samples {
        let sig: Vec<f64> = stats.iter().zip(&weights).map(|(s, w)| w * s.var().sqrt()).collect();
        let sig_sum: f64 = sig.iter().sum();
        // Neyman allocation for the total needed to reach the target.
        let needed = (sig_sum / (cfg.target_rel * value.abs())).powi(2) * 1.1;
        let total = needed.min(used as f64 * 4.0).min(cfg.max_samples as f64);
        let mut extra: Vec<u64> = stats
            .iter()
            .zip(&sig)
            .map(|(s, &sg)| {
                let want = if sig_sum > 0.0 { total * sg / sig_sum } else { 0.0 };
                (want.ceil() as u64).saturating_sub(s.n)
            })
            .collect();
        let add: u64 = extra.iter().sum();
        if used + add > cfg.max_samples {
            let f = (cfg.max_samples - used) as f64 / add as f64;
            extra.iter_mut().for_each(|x| *x = (*x as f64 * f).floor() as u64);
        }
        let add: u64 = extra.iter().sum();
        if add == 0 {
            break;
        }
        run_all(&mut stats, &trop, &extra);
        used += add;
        (value, var) = summarize(&stats, &weights);
    }
    let prefactor = gamma_real(f64::from(trop.vm1));
    let value = value * prefactor;
    let stderr = var.sqrt() * prefactor;
    Ok(QuadratureResult {
        value: Complex64::new(value, 0.0),
        stderr,
        n_eval: used,
        method: Method::StratifiedMonteCarlo,
        converged: stderr <= cfg.target_rel * value.abs(),
    })
}

fn summarize(stats: &[StratumStats], weights: &[f64]) -> (f64, f64) {
    let value = stats.iter().zip(weights).map(|(s, w)| w * s.mean).sum();
    let var = stats.iter().zip(weights).map(|(s, w)| w * w * s.var() / s.n as f64).sum();
    (value, var)
}

fn exact_one() -> QuadratureResult {
    QuadratureResult {
        value: Complex64::new(1.0, 0.0),
        stderr: 0.0,
        n_eval: 0,
        method: Method::Closed,
        converged: true,
    }
}

/// `Γ_G(0)` by tensor Gauss–Legendre on every sector (`points` per axis).
/// The error estimate is the difference to the rule with `points/2` nodes.
pub fn gamma_g0_gl(g: &FeynmanGraph, points: usize) -> Result<QuadratureResult> {
    let dec = decompose(g)?;
    if dec.trivial {
        return Ok(exact_one());
    }
    let fine = gl_sum(&dec, points);
    let coarse = gl_sum(&dec, (points / 2).max(2));
    let n_eval = dec
        .sectors
        .iter()
        .map(|s| (points as u64).pow(s.dim() as u32))
        .sum();
    Ok(QuadratureResult {
        value: Complex64::new(fine * dec.prefactor, 0.0),
        stderr: (fine - coarse).abs() * dec.prefactor,
        n_eval,
        method: Method::GaussLegendreTensor,
        converged: true,
    })
}

fn gl_sum(dec: &SectorDecomposition, points: usize) -> f64 {
    let rule = gauss_legendre_01(points);
    let mut total = 0.0;
    let mut pows = Vec::new();
    for s in &dec.sectors {
        let n = s.dim();
        let mut idx = vec![0usize; n];
        let mut t = vec![0.0; n];
        loop {
            let mut w = 1.0;
            for j in 0..n {
                t[j] = rule[idx[j]].0;
                w *= rule[idx[j]].1;
            }
            total += w * s.eval(&t, &mut pows);
            let mut j = 0;
            while j < n {
                idx[j] += 1;
                if idx[j] < points {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
    }
    total
}

/// `Γ_G(0)` in position space: `(4π)^L ∫ Π_{v≠0} d²x_v Π_e K_0(|Δx_e|)/(2π)`,
/// sampling a spanning tree's edges from the normalised propagator.
pub fn gamma_g0_position_space(g: &FeynmanGraph, samples: u64, seed: u64) -> Result<QuadratureResult> {
    let (core, _) = g.strip_legs();
    if !core.is_connected() {
        return domain("position-space estimator needs a connected graph");
    }
    let n = core.n_vertices;
    // BFS spanning tree from vertex 0.
    let mut parent_edge = vec![usize::MAX; n];
    let mut order = vec![0usize];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for (k, &(a, b)) in core.edges.iter().enumerate() {
            let w = if a == v { b } else if b == v { a } else { continue };
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = k;
                order.push(w);
            }
        }
    }
    let tree: Vec<bool> = (0..core.edges.len()).map(|k| parent_edge.contains(&k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5053));
    let mut pos = vec![(0.0f64, 0.0f64); n];
    let (mut mean, mut m2) = (0.0, 0.0);
    let norm = 1.0 / (2.0 * std::f64::consts::PI);
    for i in 1..=samples {
        for &v in order.iter().skip(1) {
            let (a, b) = core.edges[parent_edge[v]];
            let p = if a == v { b } else { a };
            let alpha: f64 = rng.sample(Exp1);
            let s = (2.0 * alpha).sqrt();
            let (n1, n2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            pos[v] = (pos[p].0 + s * n1, pos[p].1 + s * n2);
        }
        let mut w = 1.0;
        for (k, &(a, b)) in core.edges.iter().enumerate() {
            if !tree[k] {
                let r = ((pos[a].0 - pos[b].0).powi(2) + (pos[a].1 - pos[b].1).powi(2)).sqrt();
                w *= norm * bessel_k0(r.max(1e-300));
            }
        }
        let delta = w - mean;
        mean += delta / i as f64;
        m2 += delta * (w - mean);
    }
    let scale = (4.0 * std::f64::consts::PI).powi(core.loop_number() as i32);
    let stderr = (m2 / (samples.max(2) - 1) as f64 / samples as f64).sqrt() * scale;
    Ok(QuadratureResult {
        value: Complex64::new(mean * scale, 0.0),
        stderr,
        n_eval: samples,
        method: Method::PositionSpaceMonteCarlo,
        converged: true,
    })
}

/// Cache of Monte Carlo values keyed by the canonical adjacency matrix of
/// the leg-stripped graph.
#[derive(Debug, Default)]
pub struct GammaCache {
    cfg: McConfig,
    map: HashMap<BalancedMatrix, QuadratureResult>,
}

impl GammaCache {
    pub fn new(cfg: McConfig) -> Self {
        Self {
            cfg,
            map: HashMap::new(),
        }
    }

    pub fn config(&self) -> &McConfig {
        &self.cfg
    }

    /// `Γ_G(0)` for a directed multigraph (legs allowed).
    pub fn gamma(&mut self, g: &DirectedMultigraph) -> Result<QuadratureResult> {
        self.gamma_of(&FeynmanGraph::from_directed(g))
    }

    pub fn gamma_of(&mut self, g: &FeynmanGraph) -> Result<QuadratureResult> {
        let (core, _) = g.strip_legs();
        let key = core.canonical_key();
        if let Some(r) = self.map.get(&key) {
            return Ok(*r);
        }
        // Seed depends on the graph so that distinct graphs use independent streams.
        let mut cfg = self.cfg;
        cfg.seed = mix_seed(self.cfg.seed, key_hash(&key));
        let r = gamma_g0_mc(&core, &cfg)?;
        self.map.insert(key, r);
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Stable (platform independent) hash of a matrix.
fn key_hash(m: &BalancedMatrix) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64 ^ m.q() as u64;
    for &x in m.entries() {
        h = (h ^ u64::from(x)).wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Outcome of the subdivision sum rule `Σ_e Γ_{Div(e,G)}(0) = (r−1) Γ_G(0)`.
#[derive(Clone, Debug, Serialize)]
pub struct DivSumCheck {
    pub lhs: f64,
    pub lhs_err: f64,
    pub rhs: f64,
    pub rhs_err: f64,
    /// `|lhs − rhs| / combined stderr`.
    pub sigma: f64,
    pub pass: bool,
}

/// Checks the subdivision sum rule for `G ∈ GF(r, 0, 2)`; parallel edges
/// share one integral weighted by their multiplicity.
pub fn div_sum_check(g: &DirectedMultigraph, cache: &mut GammaCache) -> Result<DivSumCheck> {
    let Some((r, 0)) = g.gf_class(2) else {
        return domain("div_sum_check needs a graph in GF(r,0,2)");
    };
    let gamma_g = cache.gamma(g)?;
    let mut classes: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (k, &e) in g.edges().iter().enumerate() {
        classes.entry(e).or_insert((k, 0)).1 += 1;
    }
    let mut keys: Vec<_> = classes.into_iter().collect();
    keys.sort();
    let (mut lhs, mut lhs_var) = (0.0, 0.0);
    for (_, (edge, mult)) in keys {
        let d = g.subdivide(edge, VertexKind::Inner)?;
        let q = cache.gamma(&d)?;
        lhs += mult as f64 * q.re();
        lhs_var += (mult as f64 * q.stderr).powi(2);
    }
    let factor = (r - 1) as f64;
    let rhs = factor * gamma_g.re();
    let rhs_err = factor * gamma_g.stderr;
    let comb = (lhs_var + rhs_err * rhs_err).sqrt();
    let sigma = (lhs - rhs).abs() / comb;
    Ok(DivSumCheck {
        lhs,
        lhs_err: lhs_var.sqrt(),
        rhs,
        rhs_err,
        sigma,
        pass: sigma <= 3.0,
    })
}

/// Undirected Kirchhoff number (spanning-tree count) via the matrix-tree
/// theorem, as an independent check on [`symanzik_of`].
pub fn kirchhoff_number(g: &FeynmanGraph) -> num_bigint::BigInt {
    let n = g.n_vertices;
    if n <= 1 {
        return 1.into();
    }
    let mut lap = vec![vec![0i64; n]; n];
    for &(a, b) in &g.edges {
        lap[a][a] += 1;
        lap[b][b] += 1;
        lap[a][b] -= 1;
        lap[b][a] -= 1;
    }
    let m = (1..n)
        .map(|i| (1..n).map(|j| num_bigint::BigInt::from(lap[i][j])).collect())
        .collect();
    crate::graph::det_bareiss(m)
}

/// Unreduced box-truncated cross-check for the one-loop cycle: with
/// `S = Σα`, `∫_{[0,T]^E} e^{−S}/S dα` by Monte Carlo; returns the estimate
/// and its stderr (truncation error is below `E·e^{−T}`).
pub fn cycle_box_integral(e: usize, t_max: f64, samples: u64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xB0C5));
    let vol = t_max.powi(e as i32);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 1..=samples {
        let s: f64 = (0..e).map(|_| t_max * (1.0 - rng.gen::<f64>())).sum();
        let f = vol * (-s).exp() / s;
        let d = f - mean;
        mean += d / i as f64;
        m2 += d * (f - mean);
    }
    (mean, (m2 / (samples - 1) as f64 / samples as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_mf, graph_of_matrix};
    use crate::special::zeta;

    fn fg(n: usize, edges: &[(usize, usize)]) -> FeynmanGraph {
        FeynmanGraph {
            n_vertices: n,
            edges: edges.to_vec(),
        }
    }

    fn banana() -> FeynmanGraph {
        fg(2, &[(0, 1), (0, 1), (1, 0), (1, 0)])
    }

    #[test]
    fn symanzik_small_graphs() {
        let b = symanzik_of(&banana()).unwrap();
        assert_eq!(b.monomials.len(), 4);
        assert_eq!(b.degree(), 3);
        let c = symanzik_of(&fg(3, &[(0, 1), (1, 2), (2, 0)])).unwrap();
        assert_eq!(c.monomials, vec![1, 2, 4]);
        assert!(symanzik_of(&fg(4, &[(0, 1), (1, 0), (2, 3), (3, 2)])).is_err());
    }

    #[test]
    fn tree_count_matches_kirchhoff() {
        for f in enumerate_mf(3, 0, 2, 2).unwrap() {
            let g = FeynmanGraph::from_directed(&graph_of_matrix(&f));
            let s = symanzik_of(&g).unwrap();
            assert_eq!(num_bigint::BigInt::from(s.monomials.len()), kirchhoff_number(&g));
        }
    }

    #[test]
    fn legs_are_stripped() {
        let g = fg(5, &[(0, 1), (0, 1), (1, 0), (3, 0), (1, 4)]);
        let (core, legs) = g.strip_legs();
        assert_eq!(legs, 2);
        assert_eq!(core.edges.len(), 3);
        assert_eq!(core.n_vertices, 3);
    }

    #[test]
    fn cycle_and_banana_by_quadrature() {
        let c = gamma_g0_gl(&fg(3, &[(0, 1), (1, 2), (2, 0)]), 12).unwrap();
        assert!((c.re() - 0.5).abs() < 1e-12);
        let b = gamma_g0_gl(&banana(), 24).unwrap();
        assert!((b.re() - 7.0 * zeta(3.0)).abs() < 1e-6 * b.re(), "{}", b.re());
    }

    #[test]
    fn banana_by_monte_carlo() {
        let cfg = McConfig {
            max_samples: 2_000_000,
            ..McConfig::default()
        };
        let b = gamma_g0_mc(&banana(), &cfg).unwrap();
        assert!(b.rel_err() <= 1e-3);
        assert!((b.re() - 7.0 * zeta(3.0)).abs() < 4.0 * b.stderr);
    }

    #[test]
    fn mc_is_deterministic() {
        let cfg = McConfig {
            max_samples: 50_000,
            ..McConfig::default()
        };
        let a = gamma_g0_mc(&banana(), &cfg).unwrap();
        let b = gamma_g0_mc(&banana(), &cfg).unwrap();
        assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
    }
}
