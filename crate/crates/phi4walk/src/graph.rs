//! Balanced matrices and directed multigraphs.
//!
//! A [`BalancedMatrix`] `F` is a square non-negative integer matrix with zero
//! diagonal; it is *balanced* when row sum `i` equals column sum `i` for all
//! `i` (the common value is `dias(F)_i`).  `F` is the adjacency matrix of a
//! loop-free directed multigraph with `F[i][j]` parallel edges `i → j`.
//!
//! The class `MF(r, p, w)` consists of the `(r+p) × (r+p)` balanced matrices
//! whose first `r` ("inner") indices have degree `≥ w`, whose last `p`
//! ("outer") indices have degree exactly one, and whose Laplacian cofactor
//! `cof(Diag(F) − F)` is non-zero (equivalently: the graph is connected).
//!
//! All indices in this API are zero based.  Inner vertices always precede
//! outer vertices in matrix form.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest `r · cap` accepted by [`enumerate_mf`].
pub const ENUMERATION_BUDGET: usize = 20;

/// Square non-negative integer matrix with zero diagonal.
///
/// Ordering (`Ord`) is by dimension first and then row-major lexicographic on
/// the entries; this is the canonical order used by every enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BalancedMatrix {
    q: usize,
    entries: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    q: usize,
    rows: Vec<Vec<u32>>,
}

impl BalancedMatrix {
    /// Builds a matrix from rows; the rows must form a square matrix with zero
    /// diagonal.  Balance is *not* required here (see [`Self::is_balanced`]).
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let q = rows.len();
        let mut entries = Vec::with_capacity(q * q);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return domain(format!("row {i} has length {} but q = {q}", row.len()));
            }
            if row[i] != 0 {
                return domain(format!("diagonal entry ({i},{i}) is {}", row[i]));
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { q, entries })
    }

    /// The `q × q` zero matrix.
    pub fn zeros(q: usize) -> Self {
        Self {
            q,
            entries: vec![0; q * q],
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.q + j]
    }

    /// Sets an off-diagonal entry.
    ///
    /// # Panics
    /// Panics when `i == j` and `v != 0`.
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        assert!(i != j || v == 0, "diagonal entries must stay zero");
        self.entries[i * self.q + j] = v;
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.q.max(1)).map(|r| r.to_vec()).take(self.q).collect()
    }

    /// Row sums, i.e. `dias(F)` for a balanced matrix.
    pub fn dias(&self) -> Vec<u32> {
        (0..self.q).map(|i| (0..self.q).map(|j| self.get(i, j)).sum()).collect()
    }

    /// Column sums.
    pub fn col_sums(&self) -> Vec<u32> {
        (0..self.q).map(|j| (0..self.q).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn is_balanced(&self) -> bool {
        self.dias() == self.col_sums()
    }

    /// Total number of edges `Sum(F)`.
    pub fn sum(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    /// Errors unless the matrix is balanced.
    pub fn require_balanced(&self) -> Result<()> {
        if self.is_balanced() {
            Ok(())
        } else {
            Err(Error::NotBalanced {
                rows: self.dias(),
                cols: self.col_sums(),
            })
        }
    }

    /// `cof(Diag(F) − F)`: determinant of the Laplacian with the first row and
    /// column deleted.  For `q ≤ 1` the empty determinant `1` is returned.
    pub fn laplacian_cofactor(&self) -> BigInt {
        let q = self.q;
        if q <= 1 {
            return BigInt::one();
        }
        let d = self.dias();
        let m: Vec<Vec<BigInt>> = (1..q)
            .map(|i| {
                (1..q)
                    .map(|j| {
                        let diag = if i == j { i64::from(d[i]) } else { 0 };
                        BigInt::from(diag - i64::from(self.get(i, j)))
                    })
                    .collect()
            })
            .collect();
        det_bareiss(m)
    }

    /// `komp(F)`: delete all indices whose row and column are zero.
    pub fn komp(&self) -> BalancedMatrix {
        let rs = self.dias();
        let cs = self.col_sums();
        let keep: Vec<usize> = (0..self.q).filter(|&i| rs[i] > 0 || cs[i] > 0).collect();
        let mut out = BalancedMatrix::zeros(keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out.entries[a * keep.len() + b] = self.get(i, j);
            }
        }
        out
    }

    /// `F^σ` with `F^σ[i][j] = F[σ(i)][σ(j)]`.
    pub fn permuted(&self, sigma: &[usize]) -> BalancedMatrix {
        let q = self.q;
        let mut out = BalancedMatrix::zeros(q);
        for i in 0..q {
            for j in 0..q {
                out.entries[i * q + j] = self.get(sigma[i], sigma[j]);
            }
        }
        out
    }

    /// Membership test for `MF(r, p, w)`.
    pub fn in_mf(&self, r: usize, p: usize, w: u32) -> bool {
        if self.q != r + p || !self.is_balanced() {
            return false;
        }
        let d = self.dias();
        let degrees_ok = (0..r).all(|k| d[k] >= w) && (r..r + p).all(|k| d[k] == 1);
        degrees_ok && !self.laplacian_cofactor().is_zero()
    }

    /// Entrywise `self ≤ other`.
    pub fn le(&self, other: &BalancedMatrix) -> bool {
        self.q == other.q && self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixJson {
            q: self.q,
            rows: self.rows(),
        })
        .expect("matrix serialisation cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MatrixJson = serde_json::from_str(s)?;
        if m.rows.len() != m.q {
            return domain(format!("q = {} but {} rows given", m.q, m.rows.len()));
        }
        Self::from_rows(m.rows)
    }
}

impl Serialize for BalancedMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            q: self.q,
            rows: self.rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BalancedMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        BalancedMatrix::from_rows(m.rows).map_err(serde::de::Error::custom)
    }
}

/// Fraction-free Gaussian elimination (Bareiss) over the integers.
pub fn det_bareiss(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// `n!` as a big integer.
pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `Eul(F) = ∏_k (dias(komp F)_k − 1)! · cof(Diag(komp F) − komp F)`.
///
/// This counts the Euler circuits of the graph of `F` (parallel edges
/// distinguishable, circuits taken up to rotation); it vanishes exactly when
/// the non-isolated part of the graph is disconnected.
pub fn euler_count(f: &BalancedMatrix) -> Result<BigInt> {
    f.require_balanced()?;
    if f.is_zero() {
        return domain("euler_count needs a non-zero matrix");
    }
    let k = f.komp();
    let prefactor = k
        .dias()
        .iter()
        .fold(BigInt::one(), |acc, &d| acc * factorial(d - 1));
    Ok(prefactor * k.laplacian_cofactor())
}

/// Counts Euler circuits by depth-first search over edge sequences starting
/// with edge 0 (an independent recount of [`euler_count`]).
pub fn euler_circuits_bruteforce(f: &BalancedMatrix) -> Result<BigInt> {
    f.require_balanced()?;
    if f.is_zero() {
        return domain("euler_circuits_bruteforce needs a non-zero matrix");
    }
    let edges = graph_of_matrix(f).edges().to_vec();
    fn rec(edges: &[(usize, usize)], used: &mut [bool], at: usize, start: usize, left: usize) -> u64 {
        if left == 0 {
            return u64::from(at == start);
        }
        let mut total = 0;
        for k in 0..edges.len() {
            if !used[k] && edges[k].0 == at {
                used[k] = true;
                total += rec(edges, used, edges[k].1, start, left - 1);
                used[k] = false;
            }
        }
        total
    }
    let mut used = vec![false; edges.len()];
    used[0] = true;
    let n = rec(&edges, &mut used, edges[0].1, edges[0].0, edges.len() - 1);
    Ok(BigInt::from(n))
}

/// All balanced matrices of size `q` with entry sum `1..=max_sum` and no
/// isolated vertex.
pub fn balanced_matrices(q: usize, max_sum: u32) -> Vec<BalancedMatrix> {
    let slots: Vec<(usize, usize)> = (0..q)
        .flat_map(|i| (0..q).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    let mut cur = BalancedMatrix::zeros(q);
    fn rec(k: usize, left: u32, slots: &[(usize, usize)], cur: &mut BalancedMatrix, out: &mut Vec<BalancedMatrix>) {
        if k == slots.len() {
            if !cur.is_zero() && cur.is_balanced() && cur.dias().iter().all(|&d| d > 0) {
                out.push(cur.clone());
            }
            return;
        }
        let (i, j) = slots[k];
        for v in 0..=left {
            cur.set(i, j, v);
            rec(k + 1, left - v, slots, cur, out);
        }
        cur.set(i, j, 0);
    }
    rec(0, max_sum, &slots, &mut cur, &mut out);
    out
}

/// Enumerates `MF(r, p, w)` restricted to inner degrees `≤ cap`, in row-major
/// lexicographic order.  Only `p ∈ {0, 1}` is supported.
pub fn enumerate_mf(r: usize, p: usize, w: u32, cap: u32) -> Result<Vec<BalancedMatrix>> {
    if r == 0 {
        return domain("enumerate_mf needs r ≥ 1");
    }
    if p > 1 {
        return domain("enumerate_mf supports p ∈ {0, 1} only");
    }
    let weight = r * cap as usize;
    if weight > ENUMERATION_BUDGET {
        return Err(Error::Budget {
            what: "enumerate_mf (r·cap)",
            attempted: weight as u64,
            limit: ENUMERATION_BUDGET as u64,
        });
    }
    let q = r + p;
    let lo: Vec<u32> = (0..q).map(|k| if k < r { w } else { 1 }).collect();
    let hi: Vec<u32> = (0..q).map(|k| if k < r { cap } else { 1 }).collect();
    let mut out = Vec::new();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return Ok(out);
    }
    let mut m = BalancedMatrix::zeros(q);
    let mut rows = vec![0u32; q];
    let mut cols = vec![0u32; q];
    enumerate_rec(0, &mut m, &mut rows, &mut cols, &lo, &hi, &mut |m| {
        if m.in_mf(r, p, w) {
            out.push(m.clone());
        }
    });
    Ok(out)
}

fn enumerate_rec(
    pos: usize,
    m: &mut BalancedMatrix,
    rows: &mut [u32],
    cols: &mut [u32],
    lo: &[u32],
    hi: &[u32],
    emit: &mut dyn FnMut(&BalancedMatrix),
) {
    let q = m.q;
    if pos == q * q {
        if rows == cols {
            emit(m);
        }
        return;
    }
    let (i, j) = (pos / q, pos % q);
    let row_end = j == q - 1;
    if i == j {
        if row_end && rows[i] < lo[i] {
            return;
        }
        enumerate_rec(pos + 1, m, rows, cols, lo, hi, emit);
        return;
    }
    let max_v = (hi[i] - rows[i]).min(hi[j] - cols[j]);
    for v in 0..=max_v {
        if row_end && rows[i] + v < lo[i] {
            continue;
        }
        m.entries[pos] = v;
        rows[i] += v;
        cols[j] += v;
        enumerate_rec(pos + 1, m, rows, cols, lo, hi, emit);
        rows[i] -= v;
        cols[j] -= v;
    }
    m.entries[pos] = 0;
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                cur.push(k);
                rec(cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// The group `S_r(p) = S_r × S_p` acting separately on inner and outer indices.
pub fn block_permutations(r: usize, p: usize) -> Vec<Vec<usize>> {
    let inner = permutations(r);
    let outer = permutations(p);
    let mut out = Vec::with_capacity(inner.len() * outer.len());
    for a in &inner {
        for b in &outer {
            let mut s = a.clone();
            s.extend(b.iter().map(|&k| k + r));
            out.push(s);
        }
    }
    out
}

/// Symmetry factor `Syf(F) = #{σ ∈ S_r(p) : F^σ = F}` and `gr(F) = r!·p!/Syf(F)`.
pub fn symmetry(f: &BalancedMatrix, r: usize, p: usize) -> Result<(u64, u64)> {
    if f.q() != r + p {
        return domain(format!("matrix has q = {} but r + p = {}", f.q(), r + p));
    }
    let perms = block_permutations(r, p);
    let syf = perms.iter().filter(|s| &f.permuted(s) == f).count() as u64;
    Ok((syf, perms.len() as u64 / syf))
}

/// Canonical representative `min_σ F^σ` over `σ ∈ S_r(p)` (row-major order).
pub fn canonical_form(f: &BalancedMatrix, r: usize, p: usize) -> BalancedMatrix {
    block_permutations(r, p)
        .iter()
        .map(|s| f.permuted(s))
        .min()
        .expect("S_r(p) is never empty")
}

/// Subdivides one edge of the class `(i, j)` of `F ∈ MF(r,0,w)`: the result
/// `J` is `(r+1) × (r+1)` with `J[i][j] = F[i][j] − 1`, `J[i][r] = 1`,
/// `J[r][j] = 1`; the new last index is the outer vertex.
pub fn div(f: &BalancedMatrix, i: usize, j: usize) -> Result<BalancedMatrix> {
    let r = f.q();
    if i >= r || j >= r || i == j {
        return domain(format!("invalid edge class ({i},{j}) for q = {r}"));
    }
    if f.get(i, j) == 0 {
        return domain(format!("no edge in class ({i},{j})"));
    }
    let mut out = BalancedMatrix::zeros(r + 1);
    for a in 0..r {
        for b in 0..r {
            out.entries[a * (r + 1) + b] = f.get(a, b);
        }
    }
    out.entries[i * (r + 1) + j] -= 1;
    out.set(i, r, 1);
    out.set(r, j, 1);
    Ok(out)
}

/// `(bnke(H), anke(H))` for a matrix with a single outer (last) index: the
/// start of the edge entering the outer vertex and the end of the edge
/// leaving it.
pub fn outer_ends(h: &BalancedMatrix) -> Result<(usize, usize)> {
    let q = h.q();
    if q < 2 {
        return domain("need at least one inner and one outer index");
    }
    let r = q - 1;
    let into: Vec<usize> = (0..r).filter(|&i| h.get(i, r) > 0).collect();
    let from: Vec<usize> = (0..r).filter(|&j| h.get(r, j) > 0).collect();
    if into.len() != 1 || from.len() != 1 || h.get(into[0], r) != 1 || h.get(r, from[0]) != 1 {
        return domain("outer index must have in-degree = out-degree = 1");
    }
    Ok((into[0], from[0]))
}

/// Whether a single-outer-index matrix is closable (`bnke ≠ anke`).
pub fn is_closable(h: &BalancedMatrix) -> Result<bool> {
    let (b, a) = outer_ends(h)?;
    Ok(b != a)
}

/// `cle(H) = (bnke(H), anke(H))` for closable `H`.
pub fn cle(h: &BalancedMatrix) -> Result<(usize, usize)> {
    let (b, a) = outer_ends(h)?;
    if b == a {
        return domain("matrix is not closable");
    }
    Ok((b, a))
}

/// `cl(H)`: removes the outer index and joins its two edges into one.
pub fn cl(h: &BalancedMatrix) -> Result<BalancedMatrix> {
    let (b, a) = cle(h)?;
    let r = h.q() - 1;
    let mut out = BalancedMatrix::zeros(r);
    for i in 0..r {
        for j in 0..r {
            out.entries[i * r + j] = h.get(i, j);
        }
    }
    out.entries[b * r + a] += 1;
    Ok(out)
}

/// Role of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexKind {
    Inner,
    /// Outer vertex with in-degree = out-degree = 1.
    Outer,
    /// Split outer vertex with in-degree 0, out-degree 1.
    Source,
    /// Split outer vertex with in-degree 1, out-degree 0.
    Sink,
}

/// Loop-free directed multigraph with an inner/outer vertex partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedMultigraph {
    kinds: Vec<VertexKind>,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    inner: usize,
    outer: Vec<usize>,
    edges: Vec<[usize; 2]>,
}

impl DirectedMultigraph {
    pub fn new(kinds: Vec<VertexKind>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = kinds.len();
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return domain(format!("edge ({a},{b}) references a missing vertex"));
            }
            if a == b {
                return domain(format!("loop at vertex {a}"));
            }
        }
        Ok(Self { kinds, edges })
    }

    pub fn n_vertices(&self) -> usize {
        self.kinds.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn kinds(&self) -> &[VertexKind] {
        &self.kinds
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn ind(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == v).count()
    }

    pub fn outd(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    pub fn inner_count(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == VertexKind::Inner).count()
    }

    pub fn vertices_of(&self, kind: VertexKind) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.kinds[v] == kind).collect()
    }

    /// Loop number `L = #E − #V + 1` of a connected graph.
    pub fn loop_number(&self) -> usize {
        self.n_edges() + 1 - self.n_vertices()
    }

    /// Connectivity of the underlying undirected multigraph (all vertices).
    pub fn is_connected(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        (0..n).all(|v| find(&mut parent, v) == root)
    }

    /// Checks membership in `GF(r, p, w)` and returns `(r, p)`.
    pub fn gf_class(&self, w: usize) -> Option<(usize, usize)> {
        let mut r = 0;
        let mut p = 0;
        for v in 0..self.n_vertices() {
            let (i, o) = (self.ind(v), self.outd(v));
            match self.kinds[v] {
                VertexKind::Inner if i == o && i >= w => r += 1,
                VertexKind::Outer if i == 1 && o == 1 => p += 1,
                _ => return None,
            }
        }
        self.is_connected().then_some((r, p))
    }

    /// Adjacency matrix in vertex-id order.
    pub fn adjacency(&self) -> BalancedMatrix {
        let mut m = BalancedMatrix::zeros(self.n_vertices());
        for &(a, b) in &self.edges {
            m.entries[a * m.q + b] += 1;
        }
        m
    }

    /// Adjacency matrix under an admissible vertex map (inner vertices first,
    /// in id order, then outer vertices), together with `(r, p)`.
    pub fn to_mf(&self) -> Result<(BalancedMatrix, usize, usize)> {
        let inner = self.vertices_of(VertexKind::Inner);
        let outer = self.vertices_of(VertexKind::Outer);
        if inner.len() + outer.len() != self.n_vertices() {
            return domain("split outer vertices have no balanced matrix form");
        }
        let order: Vec<usize> = inner.iter().chain(&outer).copied().collect();
        let mut pos = vec![0; self.n_vertices()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let mut m = BalancedMatrix::zeros(order.len());
        for &(a, b) in &self.edges {
            let (x, y) = (pos[a], pos[b]);
            m.entries[x * m.q + y] += 1;
        }
        Ok((m, inner.len(), outer.len()))
    }

    /// Canonical matrix form, usable as an isomorphism invariant.
    pub fn canonical(&self) -> Result<(BalancedMatrix, usize, usize)> {
        let (m, r, p) = self.to_mf()?;
        Ok((canonical_form(&m, r, p), r, p))
    }

    /// Replaces edge `e` by two edges in series through a new vertex of the
    /// given kind (the new vertex gets the highest id).
    pub fn subdivide(&self, e: usize, kind: VertexKind) -> Result<DirectedMultigraph> {
        if e >= self.n_edges() {
            return domain(format!("edge {e} does not exist"));
        }
        let mid = self.n_vertices();
        let (a, b) = self.edges[e];
        let mut kinds = self.kinds.clone();
        kinds.push(kind);
        let mut edges = self.edges.clone();
        edges[e] = (a, mid);
        edges.push((mid, b));
        DirectedMultigraph::new(kinds, edges)
    }

    /// `Div(e, G)`: subdivision with an outer middle vertex.
    pub fn div_edge(&self, e: usize) -> Result<DirectedMultigraph> {
        self.subdivide(e, VertexKind::Outer)
    }

    /// Removes edge `e`, keeping all vertices.
    pub fn delete_edge(&self, e: usize) -> Result<DirectedMultigraph> {
        if e >= self.n_edges() {
            return domain(format!("edge {e} does not exist"));
        }
        let mut edges = self.edges.clone();
        edges.remove(e);
        DirectedMultigraph::new(self.kinds.clone(), edges)
    }

    /// `Pr(G)`: every outer vertex keeps its outgoing edge (becoming a source)
    /// and hands its incoming edge to a new sink vertex.
    pub fn pr(&self) -> Result<DirectedMultigraph> {
        let mut kinds = self.kinds.clone();
        let mut edges = self.edges.clone();
        for v in self.vertices_of(VertexKind::Outer) {
            if self.ind(v) != 1 || self.outd(v) != 1 {
                return domain(format!("outer vertex {v} is not of degree one"));
            }
            let sink = kinds.len();
            kinds.push(VertexKind::Sink);
            kinds[v] = VertexKind::Source;
            for e in edges.iter_mut() {
                if e.1 == v {
                    e.1 = sink;
                }
            }
        }
        DirectedMultigraph::new(kinds, edges)
    }

    pub fn to_json(&self) -> String {
        let inner = self.inner_count();
        let outer: Vec<usize> = (0..self.n_vertices())
            .filter(|&v| self.kinds[v] != VertexKind::Inner)
            .collect();
        serde_json::to_string(&GraphJson {
            inner,
            outer,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        })
        .expect("graph serialisation cannot fail")
    }

    /// Parses `{"inner": n, "outer": [ids], "edges": [[st, end], …]}`.  The
    /// kind of each outer vertex is inferred from its degrees.
    pub fn from_json(s: &str) -> Result<Self> {
        let g: GraphJson = serde_json::from_str(s)?;
        let n = g.inner + g.outer.len();
        let mut kinds = vec![VertexKind::Inner; n];
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e[0], e[1])).collect();
        let probe = DirectedMultigraph::new(vec![VertexKind::Inner; n], edges.clone())?;
        for &v in &g.outer {
            if v >= n {
                return domain(format!("outer id {v} out of range"));
            }
            kinds[v] = match (probe.ind(v), probe.outd(v)) {
                (1, 1) => VertexKind::Outer,
                (0, 1) => VertexKind::Source,
                (1, 0) => VertexKind::Sink,
                (i, o) => return domain(format!("outer vertex {v} has degrees ({i},{o})")),
            };
        }
        DirectedMultigraph::new(kinds, edges)
    }
}

/// `G(F)` with every vertex inner.
pub fn graph_of_matrix(f: &BalancedMatrix) -> DirectedMultigraph {
    graph_of_mf(f, f.q(), 0)
}

/// `G(F)` for `F ∈ MF(r, p, ·)`: the last `p` vertices are outer.  Parallel
/// edges are listed in row-major order of their class.
pub fn graph_of_mf(f: &BalancedMatrix, r: usize, p: usize) -> DirectedMultigraph {
    assert_eq!(f.q(), r + p, "dimension mismatch");
    let kinds = (0..r + p)
        .map(|k| if k < r { VertexKind::Inner } else { VertexKind::Outer })
        .collect();
    let mut edges = Vec::with_capacity(f.sum() as usize);
    for i in 0..f.q() {
        for j in 0..f.q() {
            for _ in 0..f.get(i, j) {
                edges.push((i, j));
            }
        }
    }
    DirectedMultigraph { kinds, edges }
}

/// Outcome of the ladder lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LadderCase {
    /// The ladder ends in a degree-2 vertex that becomes the new outer vertex
    /// of a closable core.
    A,
    /// The ladder ends in the core vertex `v` (a core id) of in-degree > 2 in
    /// the original graph.
    B { v: usize },
}

/// Result of [`ladder_decompose`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LadderDecomposition {
    pub case: LadderCase,
    /// Ladder length `lad(G)`.
    pub w: usize,
    /// `sld(G)`: the graph with the ladder removed.
    pub core: DirectedMultigraph,
}

fn single_outer(g: &DirectedMultigraph) -> Result<usize> {
    let outer = g.vertices_of(VertexKind::Outer);
    if outer.len() != 1 || g.inner_count() + 1 != g.n_vertices() {
        return domain("graph must have exactly one outer vertex and no split vertices");
    }
    Ok(outer[0])
}

/// Peels the ladder off an unclosable graph `G ∈ GFU(r, 1, 2)`.
pub fn ladder_decompose(g: &DirectedMultigraph) -> Result<LadderDecomposition> {
    let out = single_outer(g)?;
    if g.gf_class(2).is_none() {
        return domain("graph is not in GF(r,1,2)");
    }
    let edges = g.edges();
    let ank = (0..edges.len()).find(|&e| edges[e].0 == out).expect("outer has out-degree 1");
    let bnk = (0..edges.len()).find(|&e| edges[e].1 == out).expect("outer has in-degree 1");
    if edges[ank].1 != edges[bnk].0 {
        return domain("graph is closable; the ladder lemma applies to unclosable graphs");
    }
    let in_e2 = |v: usize| g.ind(v) == 2 && g.outd(v) == 2;
    let mut verts = vec![out, edges[ank].1];
    let mut ea = vec![ank];
    let mut eb = vec![bnk];
    let case = loop {
        let k = verts.len() - 1;
        let v = verts[k];
        if k > g.n_vertices() {
            return Err(crate::error::Error::Numerical {
                what: "ladder_decompose",
                detail: "ladder walk did not terminate".into(),
            });
        }
        if !in_e2(v) {
            break LadderCase::B { v };
        }
        let ca = (0..edges.len())
            .find(|&e| edges[e].1 == v && e != ea[k - 1])
            .expect("degree-2 vertex has a second incoming edge");
        let cb = (0..edges.len())
            .find(|&e| edges[e].0 == v && e != eb[k - 1])
            .expect("degree-2 vertex has a second outgoing edge");
        if edges[ca].0 != edges[cb].1 {
            break LadderCase::A;
        }
        verts.push(edges[ca].0);
        ea.push(cb);
        eb.push(ca);
    };
    let w = verts.len() - 1;
    let top = verts[w];
    let removed_v: Vec<usize> = verts[..w].to_vec();
    let removed_e: Vec<usize> = ea.iter().chain(&eb).copied().collect();
    let keep: Vec<usize> = (0..g.n_vertices()).filter(|v| !removed_v.contains(v)).collect();
    let mut pos = BTreeMap::new();
    for (k, &v) in keep.iter().enumerate() {
        pos.insert(v, k);
    }
    let kinds: Vec<VertexKind> = keep
        .iter()
        .map(|&v| match case {
            LadderCase::A if v == top => VertexKind::Outer,
            _ => VertexKind::Inner,
        })
        .collect();
    let core_edges: Vec<(usize, usize)> = (0..edges.len())
        .filter(|e| !removed_e.contains(e))
        .map(|e| (pos[&edges[e].0], pos[&edges[e].1]))
        .collect();
    let core = DirectedMultigraph::new(kinds, core_edges)?;
    let case = match case {
        LadderCase::A => LadderCase::A,
        LadderCase::B { v } => LadderCase::B { v: pos[&v] },
    };
    Ok(LadderDecomposition { case, w, core })
}

fn attach_ladder(core: &DirectedMultigraph, w: usize, top: usize) -> Result<DirectedMultigraph> {
    if w == 0 {
        return domain("ladder length must be positive");
    }
    let mut kinds: Vec<VertexKind> = core.kinds().to_vec();
    kinds[top] = VertexKind::Inner;
    let base = kinds.len();
    // v^[0] is the new outer vertex, v^[1..w-1] new inner vertices, v^[w] = top.
    kinds.push(VertexKind::Outer);
    kinds.extend(std::iter::repeat(VertexKind::Inner).take(w - 1));
    let ladder = |k: usize| if k == w { top } else { base + k };
    let mut edges = core.edges().to_vec();
    for k in 0..w {
        edges.push((ladder(k), ladder(k + 1)));
        edges.push((ladder(k + 1), ladder(k)));
    }
    DirectedMultigraph::new(kinds, edges)
}

/// `GFA(K, w)`: attaches a ladder of length `w` to the outer vertex of a
/// closable core `K ∈ GFC(k, 1, 2)`.
pub fn gfa(core: &DirectedMultigraph, w: usize) -> Result<DirectedMultigraph> {
    let top = single_outer(core)?;
    attach_ladder(core, w, top)
}

/// `GFB(K, w, v)`: attaches a ladder of length `w` to vertex `v` of a vacuum
/// core `K ∈ GF(k, 0, 2)`.
pub fn gfb(core: &DirectedMultigraph, w: usize, v: usize) -> Result<DirectedMultigraph> {
    if core.inner_count() != core.n_vertices() {
        return domain("GFB needs a core without outer vertices");
    }
    if v >= core.n_vertices() {
        return domain(format!("vertex {v} not in core"));
    }
    attach_ladder(core, w, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[u32]]) -> BalancedMatrix {
        BalancedMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn banana_graph_has_four_edges() {
        let g = graph_of_matrix(&m(&[&[0, 2], &[2, 0]]));
        assert_eq!(g.n_vertices(), 2);
        assert_eq!(g.edges(), &[(0, 1), (0, 1), (1, 0), (1, 0)]);
    }

    #[test]
    fn euler_count_small_cases() {
        assert_eq!(euler_count(&m(&[&[0, 1, 0], &[0, 0, 1], &[1, 0, 0]])).unwrap(), 1.into());
        assert_eq!(euler_count(&m(&[&[0, 2], &[2, 0]])).unwrap(), 2.into());
        let two_cycles = m(&[&[0, 1, 0, 0], &[1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, 0]]);
        assert_eq!(euler_count(&two_cycles).unwrap(), 0.into());
        assert!(euler_count(&m(&[&[0, 1], &[0, 0]])).is_err());
    }

    #[test]
    fn euler_count_matches_recount_on_small_graphs() {
        for q in 2..=4 {
            for f in balanced_matrices(q, 5) {
                assert_eq!(euler_count(&f).unwrap(), euler_circuits_bruteforce(&f).unwrap(), "{f:?}");
            }
        }
    }

    #[test]
    fn isolated_vertices_are_ignored_by_euler_count() {
        let f = m(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 0]]);
        assert_eq!(euler_count(&f).unwrap(), 1.into());
    }

    #[test]
    fn enumerate_small_classes() {
        assert_eq!(enumerate_mf(2, 0, 2, 2).unwrap(), vec![m(&[&[0, 2], &[2, 0]])]);
        assert!(enumerate_mf(1, 0, 2, 2).unwrap().is_empty());
        assert!(enumerate_mf(6, 0, 2, 4).is_err());
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let all = enumerate_mf(3, 1, 2, 3).unwrap();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(all.iter().all(|f| f.in_mf(3, 1, 2)));
    }

    #[test]
    fn symmetry_of_banana() {
        assert_eq!(symmetry(&m(&[&[0, 2], &[2, 0]]), 2, 0).unwrap(), (2, 1));
        for f in enumerate_mf(3, 0, 2, 2).unwrap() {
            let (syf, gr) = symmetry(&f, 3, 0).unwrap();
            assert_eq!(syf * gr, 6);
        }
    }

    #[test]
    fn div_cl_roundtrip() {
        let f = m(&[&[0, 2], &[2, 0]]);
        let d = div(&f, 0, 1).unwrap();
        assert_eq!(d, m(&[&[0, 1, 1], &[2, 0, 0], &[0, 1, 0]]));
        assert_eq!(cl(&d).unwrap(), f);
        assert_eq!(cle(&div(&f, 1, 0).unwrap()).unwrap(), (1, 0));
        assert!(div(&f, 0, 0).is_err());
        let unclosable = m(&[&[0, 2, 1], &[2, 0, 0], &[1, 0, 0]]);
        assert!(cl(&unclosable).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let f = m(&[&[0, 2], &[2, 0]]);
        assert_eq!(f.to_json(), r#"{"q":2,"rows":[[0,2],[2,0]]}"#);
        assert_eq!(BalancedMatrix::from_json(&f.to_json()).unwrap(), f);
        let g = graph_of_mf(&div(&f, 0, 1).unwrap(), 2, 1);
        let back = DirectedMultigraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn pr_splits_outer_vertex() {
        let h = graph_of_mf(&div(&m(&[&[0, 2], &[2, 0]]), 0, 1).unwrap(), 2, 1);
        let p = h.pr().unwrap();
        assert_eq!(p.vertices_of(VertexKind::Source), vec![2]);
        assert_eq!(p.vertices_of(VertexKind::Sink), vec![3]);
        assert_eq!(p.n_edges(), 5);
    }

    #[test]
    fn ladder_case_a_roundtrip() {
        let core = graph_of_mf(&div(&m(&[&[0, 2], &[2, 0]]), 0, 1).unwrap(), 2, 1);
        let g = gfa(&core, 1).unwrap();
        let d = ladder_decompose(&g).unwrap();
        assert_eq!((d.case.clone(), d.w), (LadderCase::A, 1));
        assert_eq!(d.core.canonical().unwrap(), core.canonical().unwrap());
    }

    #[test]
    fn ladder_case_b_roundtrip() {
        // Vertex 0 of this core has degree 3.
        let core_m = m(&[&[0, 2, 1], &[1, 0, 1], &[2, 0, 0]]);
        assert!(core_m.in_mf(3, 0, 2));
        let core = graph_of_matrix(&core_m);
        let g = gfb(&core, 2, 0).unwrap();
        let d = ladder_decompose(&g).unwrap();
        assert_eq!(d.w, 2);
        assert_eq!(d.case, LadderCase::B { v: 0 });
        assert_eq!(d.core.canonical().unwrap(), core.canonical().unwrap());
    }
}
