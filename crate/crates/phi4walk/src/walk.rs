//! Simple random walks on `Z²`: exact samplers for closed and free walks,
//! multiple-point range counting, and Monte-Carlo estimates of the rescaled
//! centred statistics
//!
//! ```text
//! β(n,k) = ln(L)³/(4π³ L) · (N_{2k} − E N_{2k}),   L = walk length,
//! ```
//!
//! with `L = 2n` for closed walks and `L = n` for free walks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::feynman::mix_seed;

/// A unit step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Step {
    E,
    W,
    N,
    S,
}

impl Step {
    pub const ALL: [Step; 4] = [Step::E, Step::W, Step::N, Step::S];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Step::E => (1, 0),
            Step::W => (-1, 0),
            Step::N => (0, 1),
            Step::S => (0, -1),
        }
    }

    pub fn from_char(ch: char) -> Option<Step> {
        match ch {
            'E' => Some(Step::E),
            'W' => Some(Step::W),
            'N' => Some(Step::N),
            'S' => Some(Step::S),
            _ => None,
        }
    }
}

/// Closed walks (length `2n`, return to the origin) or free walks (length `n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkKind {
    Closed,
    Free,
}

impl WalkKind {
    /// Walk length for parameter `n`.
    pub fn length(self, n: usize) -> usize {
        match self {
            WalkKind::Closed => 2 * n,
            WalkKind::Free => n,
        }
    }
}

/// A walk as a step sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSample {
    pub kind: WalkKind,
    pub steps: Vec<Step>,
}

impl WalkSample {
    /// Parses a string such as `"EWNS"`.
    pub fn parse(kind: WalkKind, text: &str) -> Result<Self> {
        let steps = text
            .chars()
            .map(|ch| Step::from_char(ch).ok_or(ch))
            .collect::<std::result::Result<Vec<_>, _>>();
        let steps = match steps {
            Ok(s) => s,
            Err(ch) => return domain(format!("invalid step {ch:?}")),
        };
        let w = Self { kind, steps };
        if kind == WalkKind::Closed && !w.is_closed() {
            return domain("walk does not return to the origin");
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        let (x, y) = self.steps.iter().fold((0, 0), |(x, y), s| {
            let (dx, dy) = s.delta();
            (x + dx, y + dy)
        });
        x == 0 && y == 0
    }

    pub fn to_string_compact(&self) -> String {
        self.steps
            .iter()
            .map(|s| match s {
                Step::E => 'E',
                Step::W => 'W',
                Step::N => 'N',
                Step::S => 'S',
            })
            .collect()
    }

    /// Lattice positions at times `0..=len`.
    pub fn positions(&self) -> Vec<(i32, i32)> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let (mut x, mut y) = (0, 0);
        out.push((0, 0));
        for s in &self.steps {
            let (dx, dy) = s.delta();
            x += dx;
            y += dy;
            out.push((x, y));
        }
        out
    }
}

/// Draws a walk: free walks take i.i.d. uniform steps; closed walks draw the
/// number of east steps `a` with probability `C(n,a)² / C(2n,n)` (a
/// hypergeometric law) and shuffle the multiset `{E^a W^a N^{n−a} S^{n−a}}`
/// uniformly, which makes every closed walk of length `2n` equally likely.
pub fn sample_walk_rng<R: Rng>(kind: WalkKind, n: usize, rng: &mut R) -> Result<WalkSample> {
    if n < 1 {
        return domain("walks need n ≥ 1");
    }
    let steps = match kind {
        WalkKind::Free => (0..n).map(|_| Step::ALL[rng.gen_range(0..4)]).collect(),
        WalkKind::Closed => {
            let hyper = Hypergeometric::new(2 * n as u64, n as u64, n as u64)
                .map_err(|e| crate::error::Error::Numerical {
                    what: "hypergeometric sampler",
                    detail: e.to_string(),
                })?;
            let a = hyper.sample(rng) as usize;
            let mut steps = Vec::with_capacity(2 * n);
            steps.extend(std::iter::repeat(Step::E).take(a));
            steps.extend(std::iter::repeat(Step::W).take(a));
            steps.extend(std::iter::repeat(Step::N).take(n - a));
            steps.extend(std::iter::repeat(Step::S).take(n - a));
            steps.shuffle(rng);
            steps
        }
    };
    Ok(WalkSample { kind, steps })
}

/// [`sample_walk_rng`] with a ChaCha8 generator seeded from `seed`.
pub fn sample_walk(kind: WalkKind, n: usize, seed: u64) -> Result<WalkSample> {
    sample_walk_rng(kind, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Which occupation times count as visits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VisitConvention {
    /// Times `1..=L`: the starting point is counted when (if) it is revisited,
    /// so a closed walk's origin is counted at its return time but not at 0.
    #[default]
    ExcludeStart,
    /// Times `0..=L`.
    IncludeStart,
}

impl VisitConvention {
    fn first_time(self) -> usize {
        match self {
            VisitConvention::ExcludeStart => 1,
            VisitConvention::IncludeStart => 0,
        }
    }
}

/// What "multiplicity `2k`" means for a lattice point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplicityConvention {
    /// The point is occupied exactly `2k` times.
    #[default]
    VisitCount,
    /// The point has degree `2k` in the walk's multigraph (`k` arrivals and
    /// `k` departures), i.e. it is occupied exactly `k` times.
    Degree,
}

/// Both counting switches of the multiple-point range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountConvention {
    pub visits: VisitConvention,
    pub multiplicity: MultiplicityConvention,
}

impl CountConvention {
    /// Number of occupations that make a point of multiplicity `2k`.
    pub fn occupations(&self, k: usize) -> usize {
        match self.multiplicity {
            MultiplicityConvention::VisitCount => 2 * k,
            MultiplicityConvention::Degree => k,
        }
    }

    /// `N_{2k}` from a visit-count histogram.
    pub fn n2k(&self, hist: &[u64], k: usize) -> u64 {
        hist.get(self.occupations(k)).copied().unwrap_or(0)
    }
}

/// Open-addressing visit counter for lattice points (linear probing,
/// Fibonacci hashing), reusable across walks.
#[derive(Clone, Debug)]
pub struct LatticeCounter {
    keys: Vec<u64>,
    counts: Vec<u32>,
    touched: Vec<usize>,
    mask: usize,
}

fn pack(x: i32, y: i32) -> u64 {
    (u64::from(x as u32) << 32) | u64::from(y as u32)
}

impl LatticeCounter {
    /// A counter for at least `points` distinct points at load ≤ 1/2.
    pub fn with_capacity(points: usize) -> Self {
        let cap = (2 * points.max(8)).next_power_of_two();
        Self {
            keys: vec![0; cap],
            counts: vec![0; cap],
            touched: Vec::with_capacity(points),
            mask: cap - 1,
        }
    }

    fn ensure(&mut self, points: usize) {
        if 2 * points > self.keys.len() {
            *self = Self::with_capacity(points);
        }
    }

    pub fn clear(&mut self) {
        for &i in &self.touched {
            self.counts[i] = 0;
        }
        self.touched.clear();
    }

    pub fn visit(&mut self, x: i32, y: i32) {
        let key = pack(x, y);
        let mut i = (key.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 20) as usize & self.mask;
        loop {
            if self.counts[i] == 0 {
                self.keys[i] = key;
                self.counts[i] = 1;
                self.touched.push(i);
                return;
            }
            if self.keys[i] == key {
                self.counts[i] += 1;
                return;
            }
            i = (i + 1) & self.mask;
        }
    }

    /// `hist[m]` = number of points visited exactly `m` times.
    pub fn histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; 2];
        for &i in &self.touched {
            let m = self.counts[i] as usize;
            if m >= hist.len() {
                hist.resize(m + 1, 0);
            }
            hist[m] += 1;
        }
        hist
    }
}

/// Visit-count histogram of a walk using a supplied counter.
pub fn visit_histogram_with(w: &WalkSample, conv: VisitConvention, counter: &mut LatticeCounter) -> Vec<u64> {
    counter.ensure(w.len() + 1);
    counter.clear();
    let (mut x, mut y) = (0, 0);
    if conv.first_time() == 0 {
        counter.visit(0, 0);
    }
    for s in &w.steps {
        let (dx, dy) = s.delta();
        x += dx;
        y += dy;
        counter.visit(x, y);
    }
    counter.histogram()
}

/// Visit-count histogram of a walk.
pub fn visit_histogram(w: &WalkSample, conv: VisitConvention) -> Vec<u64> {
    visit_histogram_with(w, conv, &mut LatticeCounter::with_capacity(w.len() + 1))
}

/// Multiple-point range: `k ↦ N_{2k}` for `k ≥ 1` under the given
/// convention (by default, points visited exactly `2k` times).
pub fn multiplicity_range(w: &WalkSample, conv: CountConvention) -> BTreeMap<usize, u64> {
    let hist = visit_histogram(w, conv.visits);
    (1..)
        .take_while(|&k| conv.occupations(k) < hist.len())
        .map(|k| (k, conv.n2k(&hist, k)))
        .collect()
}

/// Moments of the rescaled centred statistic over a batch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub kind: WalkKind,
    pub n: usize,
    pub k: usize,
    pub batch: usize,
    pub seed: u64,
    /// Mean of the raw `N_{2k}`.
    pub mean_count: f64,
    /// `ln(L)³/(4π³ L)`.
    pub scale: f64,
    /// First moment of β (zero by construction of the in-batch centring).
    pub m1: f64,
    pub m2: f64,
    pub m2_stderr: f64,
    pub m3: f64,
    pub m3_stderr: f64,
}

/// Raw `N_{2k}` for `batch` walks; walk `j` uses seed `mix_seed(seed, j)`.
pub fn sample_counts(
    kind: WalkKind,
    n: usize,
    k: usize,
    batch: usize,
    seed: u64,
    conv: CountConvention,
) -> Result<Vec<u64>> {
    if n < 1 || k < 1 {
        return domain("need n ≥ 1 and k ≥ 1");
    }
    let len = kind.length(n);
    let one = |counter: &mut LatticeCounter, j: usize| -> Result<u64> {
        let w = sample_walk(kind, n, mix_seed(seed, j as u64))?;
        Ok(conv.n2k(&visit_histogram_with(&w, conv.visits, counter), k))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..batch)
            .into_par_iter()
            .map_init(|| LatticeCounter::with_capacity(len + 1), |c, j| one(c, j))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut counter = LatticeCounter::with_capacity(len + 1);
        (0..batch).map(|j| one(&mut counter, j)).collect()
    }
}

/// Minimum batch size for [`beta_statistic`].
pub const MIN_BATCH: usize = 1000;

/// Estimates the first three moments of `β(n,k)`, centring with the batch
/// mean.
pub fn beta_statistic(
    kind: WalkKind,
    n: usize,
    k: usize,
    batch: usize,
    seed: u64,
    conv: CountConvention,
) -> Result<BetaEstimate> {
    if batch < MIN_BATCH {
        return domain(format!("batch must be at least {MIN_BATCH}"));
    }
    let counts = sample_counts(kind, n, k, batch, seed, conv)?;
    let len = kind.length(n) as f64;
    let scale = len.ln().powi(3) / (4.0 * PI.powi(3) * len);
    let bf = batch as f64;
    let mean_count = counts.iter().map(|&c| c as f64).sum::<f64>() / bf;
    let beta: Vec<f64> = counts.iter().map(|&c| scale * (c as f64 - mean_count)).collect();
    let mean_of = |p: i32| beta.iter().map(|b| b.powi(p)).sum::<f64>() / bf;
    let (m1, m2, m3) = (mean_of(1), mean_of(2), mean_of(3));
    let se = |p: i32, m: f64| {
        let v = beta.iter().map(|b| (b.powi(p) - m).powi(2)).sum::<f64>() / (bf - 1.0);
        (v / bf).sqrt()
    };
    Ok(BetaEstimate {
        kind,
        n,
        k,
        batch,
        seed,
        mean_count,
        scale,
        m1,
        m2,
        m2_stderr: se(2, m2),
        m3,
        m3_stderr: se(3, m3),
    })
}

/// All closed walks of length `2n` (lexicographic in `E < W < N < S`).
pub fn enumerate_closed(n: usize) -> Vec<WalkSample> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(2 * n);
    fn rec(cur: &mut Vec<Step>, rem: usize, x: i32, y: i32, out: &mut Vec<WalkSample>) {
        if (x.unsigned_abs() + y.unsigned_abs()) as usize > rem {
            return;
        }
        if rem == 0 {
            out.push(WalkSample {
                kind: WalkKind::Closed,
                steps: cur.clone(),
            });
            return;
        }
        for s in Step::ALL {
            let (dx, dy) = s.delta();
            cur.push(s);
            rec(cur, rem - 1, x + dx, y + dy, out);
            cur.pop();
        }
    }
    rec(&mut cur, 2 * n, 0, 0, &mut out);
    out
}

/// Goodness of fit of the closed-walk sampler against the uniform law.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityTest {
    pub n: usize,
    pub samples: usize,
    pub cells: usize,
    pub chi2: f64,
    pub p_value: f64,
}

/// χ² test of [`sample_walk_rng`] for closed walks of length `2n`.
pub fn closed_uniformity(n: usize, samples: usize, seed: u64) -> Result<UniformityTest> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let all = enumerate_closed(n);
    let index: std::collections::HashMap<Vec<Step>, usize> =
        all.iter().enumerate().map(|(i, w)| (w.steps.clone(), i)).collect();
    let mut counts = vec![0u64; all.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let w = sample_walk_rng(WalkKind::Closed, n, &mut rng)?;
        counts[index[&w.steps]] += 1;
    }
    let expect = samples as f64 / all.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    let dist = ChiSquared::new((all.len() - 1) as f64).map_err(|e| crate::error::Error::Numerical {
        what: "chi-squared distribution",
        detail: e.to_string(),
    })?;
    Ok(UniformityTest {
        n,
        samples,
        cells: all.len(),
        chi2,
        p_value: 1.0 - dist.cdf(chi2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_walk_counts() {
        // C(2n,n)² closed walks of length 2n.
        assert_eq!(enumerate_closed(1).len(), 4);
        assert_eq!(enumerate_closed(2).len(), 36);
        assert_eq!(enumerate_closed(3).len(), 400);
    }

    #[test]
    fn sampler_is_deterministic_and_closed() {
        let a = sample_walk(WalkKind::Closed, 50, 3).unwrap();
        let b = sample_walk(WalkKind::Closed, 50, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.is_closed() && a.len() == 100);
        assert_eq!(sample_walk(WalkKind::Free, 7, 1).unwrap().len(), 7);
    }

    #[test]
    fn hand_counts() {
        let w = WalkSample::parse(WalkKind::Closed, "EWEW").unwrap();
        // Times 1..4 occupy (1,0),(0,0),(1,0),(0,0).
        let m = multiplicity_range(&w, CountConvention::default());
        assert_eq!(m.get(&1), Some(&2));
        let deg = CountConvention {
            multiplicity: MultiplicityConvention::Degree,
            ..CountConvention::default()
        };
        assert_eq!(multiplicity_range(&w, deg).get(&2), Some(&2));
        // Including time 0 the origin is visited three times.
        let h = visit_histogram(&w, VisitConvention::IncludeStart);
        assert_eq!((h[2], h[3]), (1, 1));
        let s = WalkSample::parse(WalkKind::Free, "EEEE").unwrap();
        assert!(multiplicity_range(&s, CountConvention::default()).values().all(|&v| v == 0));
    }

    #[test]
    fn counter_survives_reuse_and_growth() {
        let mut c = LatticeCounter::with_capacity(4);
        let w = sample_walk(WalkKind::Free, 500, 9).unwrap();
        let h1 = visit_histogram_with(&w, VisitConvention::ExcludeStart, &mut c);
        let h2 = visit_histogram_with(&w, VisitConvention::ExcludeStart, &mut c);
        assert_eq!(h1, h2);
        assert_eq!(h1.iter().enumerate().map(|(m, &v)| m as u64 * v).sum::<u64>(), 500);
    }

    #[test]
    fn beta_is_centred() {
        let b = beta_statistic(WalkKind::Free, 256, 1, 1000, 5, CountConvention::default()).unwrap();
        assert!(b.m1.abs() < 1e-12);
        assert!(b.m2 > 0.0);
    }
}
