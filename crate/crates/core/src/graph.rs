//! Directed weighted trust network.
//!
//! An edge `j → i` means "j influences i" and carries the trust score that
//! `i` places in `j`. Self-influence is not an edge: it lives in
//! [`DynGraph::self_weight`]. For every vertex with in-edges the in-weights
//! sum to `1 − self_weight`.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};

/// Tolerance of the in-weight normalization invariant.
pub const NORMALIZATION_TOL: f64 = 1e-9;

const POWER_REL_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 10_000;

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

fn next_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Directed edge `from → to`.
pub type Edge = (usize, usize);

#[derive(Clone, Debug)]
pub struct DynGraph {
    /// `in_edges[i]` holds `(source, weight)` sorted by source.
    in_edges: Vec<Vec<(usize, f64)>>,
    self_weights: Vec<f64>,
    revision: u64,
}

impl PartialEq for DynGraph {
    fn eq(&self, other: &Self) -> bool {
        self.in_edges == other.in_edges && self.self_weights == other.self_weights
    }
}

/// Parameters of the Katz self-weight map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KatzParams {
    pub beta: f64,
    /// α = alpha_fraction / λ_max.
    pub alpha_fraction: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
}

impl Default for KatzParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            alpha_fraction: 0.9,
            clamp_min: 0.05,
            clamp_max: 0.95,
        }
    }
}

/// Vertex partition with blocks ordered by their smallest vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    /// Block index of each vertex.
    pub labels: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    #[inline]
    pub fn same_block(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }
}

impl DynGraph {
    /// Edgeless graph on `n` vertices with self-weight 0.5 everywhere.
    pub fn new(n: usize) -> Self {
        Self {
            in_edges: vec![Vec::new(); n],
            self_weights: vec![0.5; n],
            revision: next_revision(),
        }
    }

    /// Builds a graph from weighted edges `(from, to, weight)`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = Self::new(n);
        for (from, to, w) in edges {
            g.set_edge(from, to, w)?;
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.in_edges.len()
    }

    pub fn edge_count(&self) -> usize {
        self.in_edges.iter().map(Vec::len).sum()
    }

    /// Process-unique stamp renewed by every mutation. Two graphs with the
    /// same revision have identical contents.
    #[inline]
    pub fn revision(&self) -> u64 {
        self.revision
    }

    #[inline]
    pub fn in_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.in_edges[i]
    }

    #[inline]
    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        let list = &self.in_edges[to];
        list.binary_search_by_key(&from, |e| e.0)
            .ok()
            .map(|k| list[k].1)
    }

    #[inline]
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.weight(from, to).is_some()
    }

    /// Inserts or overwrites the edge `from → to`.
    pub fn set_edge(&mut self, from: usize, to: usize, weight: f64) -> Result<()> {
        let n = self.n();
        if from >= n || to >= n {
            return Err(Error::InvalidInput(format!("edge {from}->{to} out of range for n={n}")));
        }
        if from == to {
            return Err(Error::InvalidInput(format!("self-loop on vertex {from}")));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidInput(format!("edge {from}->{to} weight {weight} must be positive")));
        }
        self.revision = next_revision();
        let list = &mut self.in_edges[to];
        match list.binary_search_by_key(&from, |e| e.0) {
            Ok(k) => list[k].1 = weight,
            Err(k) => list.insert(k, (from, weight)),
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> Option<f64> {
        self.revision = next_revision();
        let list = &mut self.in_edges[to];
        list.binary_search_by_key(&from, |e| e.0)
            .ok()
            .map(|k| list.remove(k).1)
    }

    /// Keeps only the in-edges of `to` for which `keep(source)` holds and
    /// returns the removed sources.
    pub(crate) fn retain_in_edges<F>(&mut self, to: usize, mut keep: F) -> Vec<usize>
    where
        F: FnMut(usize) -> bool,
    {
        self.revision = next_revision();
        let mut removed = Vec::new();
        self.in_edges[to].retain(|&(j, _)| {
            let k = keep(j);
            if !k {
                removed.push(j);
            }
            k
        });
        removed
    }

    /// All edges as `(from, to, weight)`, sorted by `(from, to)`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self
            .in_edges
            .iter()
            .enumerate()
            .flat_map(|(to, list)| list.iter().map(move |&(from, w)| (from, to, w)))
            .collect();
        out.sort_unstable_by_key(|e| (e.0, e.1));
        out
    }

    pub fn edge_set(&self) -> BTreeSet<Edge> {
        self.in_edges
            .iter()
            .enumerate()
            .flat_map(|(to, list)| list.iter().map(move |&(from, _)| (from, to)))
            .collect()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n()];
        for list in &self.in_edges {
            for &(j, _) in list {
                deg[j] += 1;
            }
        }
        deg
    }

    #[inline]
    pub fn self_weight(&self, i: usize) -> f64 {
        self.self_weights[i]
    }

    pub fn self_weights(&self) -> &[f64] {
        &self.self_weights
    }

    pub fn set_self_weights(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.n() {
            return Err(Error::VertexMismatch {
                left: w.len(),
                right: self.n(),
            });
        }
        if let Some(bad) = w.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidInput(format!("self-weight {bad} outside (0, 1)")));
        }
        self.self_weights = w;
        self.revision = next_revision();
        Ok(())
    }

    pub fn set_self_weight(&mut self, i: usize, w: f64) -> Result<()> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::InvalidInput(format!("self-weight {w} outside (0, 1)")));
        }
        self.self_weights[i] = w;
        self.revision = next_revision();
        Ok(())
    }

    /// Scales the in-weights of `i` so they sum to `1 − w_ii`, keeping their
    /// proportions. No-op for a vertex without in-edges.
    pub fn renormalize_in_weights(&mut self, i: usize) {
        self.revision = next_revision();
        let target = 1.0 - self.self_weights[i];
        let list = &mut self.in_edges[i];
        let sum: f64 = list.iter().map(|e| e.1).sum();
        if list.is_empty() || sum <= 0.0 {
            return;
        }
        let scale = target / sum;
        for e in list.iter_mut() {
            e.1 *= scale;
        }
    }

    pub fn renormalize_all(&mut self) {
        for i in 0..self.n() {
            self.renormalize_in_weights(i);
        }
    }

    /// Largest deviation of any vertex's in-weight sum from `1 − w_ii`.
    pub fn normalization_error(&self) -> f64 {
        self.in_edges
            .iter()
            .zip(&self.self_weights)
            .filter(|(list, _)| !list.is_empty())
            .map(|(list, &w)| (list.iter().map(|e| e.1).sum::<f64>() - (1.0 - w)).abs())
            .fold(0.0, f64::max)
    }

    /// Simple directed paths of length 2 or 3 from `from` to `to`, as vertex
    /// sequences in lexicographic order.
    pub fn enumerate_paths(&self, from: usize, to: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        if from == to {
            return out;
        }
        let out_adj = self.out_adjacency();
        let mut path = vec![from];
        self.extend_paths(&out_adj, to, &mut path, &mut out);
        out
    }

    fn extend_paths(
        &self,
        out_adj: &[Vec<usize>],
        to: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *path.last().unwrap();
        let hops = path.len() - 1;
        for &next in &out_adj[last] {
            if next == to {
                if hops + 1 >= 2 {
                    let mut p = path.clone();
                    p.push(to);
                    out.push(p);
                }
            } else if hops + 1 < 3 && !path.contains(&next) {
                path.push(next);
                self.extend_paths(out_adj, to, path, out);
                path.pop();
            }
        }
    }

    /// Out-neighbor lists, each sorted ascending.
    pub fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for (to, list) in self.in_edges.iter().enumerate() {
            for &(from, _) in list {
                adj[from].push(to);
            }
        }
        // targets are visited in ascending order, so lists are already sorted
        adj
    }

    /// Mean product of edge weights over all simple 2- and 3-hop paths
    /// `from → … → to`.
    pub fn nondirect_trust_score(&self, from: usize, to: usize) -> Result<f64> {
        let mut agg = PathAggregator::new(self.n());
        agg.compute(self, to);
        agg.score(from).ok_or(Error::NoPath { from, to })
    }

    /// Weak components, each labeled by its smallest vertex.
    pub fn weakly_connected_components(&self) -> Partition {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (to, list) in self.in_edges.iter().enumerate() {
            for &(from, _) in list {
                let a = find(&mut parent, from);
                let b = find(&mut parent, to);
                if a != b {
                    // keep the smaller id as root so roots are block minima
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
        let mut labels = vec![usize::MAX; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut root_label = vec![usize::MAX; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if root_label[r] == usize::MAX {
                root_label[r] = blocks.len();
                blocks.push(Vec::new());
            }
            labels[v] = root_label[r];
            blocks[root_label[r]].push(v);
        }
        Partition { labels, blocks }
    }

    /// Strongly connected components (iterative Tarjan), in no particular order.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let adj = self.out_adjacency();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comps = Vec::new();
        let mut counter = 0;
        let mut call: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            call.push((root, 0));
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut next)) = call.last_mut() {
                if *next < adj[v].len() {
                    let w = adj[v][*next];
                    *next += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(u, _)) = call.last() {
                        low[u] = low[u].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comps.push(comp);
                    }
                }
            }
        }
        comps
    }

    /// Spectral radius of the 0/1 adjacency matrix.
    ///
    /// The radius is the maximum over strongly connected components. Each
    /// non-trivial component is irreducible, so power iteration on
    /// `A_c + I` (primitive) converges, and the Collatz–Wielandt bounds
    /// `min (Mx)_k/x_k ≤ ρ ≤ max (Mx)_k/x_k` give a certified stopping rule.
    pub fn spectral_radius(&self) -> Result<f64> {
        let mut rho: f64 = 0.0;
        let n = self.n();
        let mut local = vec![usize::MAX; n];
        for comp in self.strongly_connected_components() {
            if comp.len() < 2 {
                continue;
            }
            for (k, &v) in comp.iter().enumerate() {
                local[v] = k;
            }
            // in-lists restricted to the component, in local indices
            let ins: Vec<Vec<usize>> = comp
                .iter()
                .map(|&v| {
                    self.in_edges[v]
                        .iter()
                        .filter(|e| local[e.0] != usize::MAX)
                        .map(|e| local[e.0])
                        .collect()
                })
                .collect();
            let r = power_iterate_shifted(&ins)?;
            rho = rho.max(r);
            for &v in &comp {
                local[v] = usize::MAX;
            }
        }
        Ok(rho)
    }

    /// Spectral radius from a dense eigen-decomposition.
    pub fn spectral_radius_dense(&self) -> f64 {
        let n = self.n();
        if n == 0 || self.edge_count() == 0 {
            return 0.0;
        }
        let a = self.adjacency_matrix();
        // unshifted QR can cycle forever on permutation-like matrices
        for shift in [0.0, 0.371, -0.529, 1.137] {
            let m = &a + DMatrix::<f64>::identity(n, n) * shift;
            if let Some(schur) = Schur::try_new(m, f64::EPSILON, 10_000) {
                return schur
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| (z - shift).norm())
                    .fold(0.0, f64::max);
            }
        }
        // Gelfand: ρ = lim ‖A^k‖^(1/k)
        let mut p = a.clone();
        let mut log_scale = 0.0;
        let k = 512;
        for _ in 1..k {
            p = &p * &a;
            let norm = p.amax();
            if norm == 0.0 {
                return 0.0;
            }
            p /= norm;
            log_scale += norm.ln();
        }
        (log_scale / k as f64).exp()
    }

    /// Dense 0/1 adjacency, `A[j][i] = 1` iff `j → i`.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for (to, list) in self.in_edges.iter().enumerate() {
            for &(from, _) in list {
                a[(from, to)] = 1.0;
            }
        }
        a
    }

    /// Solves `(I − α Aᵀ) x = β 1`.
    pub fn katz_scores(&self, alpha: f64, beta: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let mut m = DMatrix::<f64>::identity(n, n);
        for (i, list) in self.in_edges.iter().enumerate() {
            for &(j, _) in list {
                m[(i, j)] -= alpha;
            }
        }
        let rhs = DVector::from_element(n, beta);
        let x = m.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(x.iter().copied().collect())
    }

    /// α actually used for Katz scores. A nilpotent adjacency (λ_max = 0)
    /// admits any α; `alpha_fraction` is used as if λ_max were 1.
    pub fn katz_alpha(&self, p: &KatzParams) -> f64 {
        let lambda = self
            .spectral_radius()
            .unwrap_or_else(|_| self.spectral_radius_dense());
        if lambda > 1e-12 {
            p.alpha_fraction / lambda
        } else {
            p.alpha_fraction
        }
    }

    /// Max-normalized, clamped Katz centrality: the self-weight of each agent.
    pub fn katz_self_weights(&self, p: &KatzParams) -> Result<Vec<f64>> {
        if self.n() == 0 {
            return Ok(Vec::new());
        }
        let alpha = self.katz_alpha(p);
        let x = self.katz_scores(alpha, p.beta)?;
        Ok(normalize_katz(&x, p))
    }
}

pub(crate) fn normalize_katz(x: &[f64], p: &KatzParams) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    x.iter()
        .map(|&v| (v / max).clamp(p.clamp_min, p.clamp_max))
        .collect()
}

/// Power iteration on `A + I` for an irreducible block given as in-lists.
/// Returns ρ(A).
fn power_iterate_shifted(ins: &[Vec<usize>]) -> Result<f64> {
    let m = ins.len();
    let mut x = vec![1.0; m];
    let mut y = vec![0.0; m];
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut norm = 0.0;
        for (k, list) in ins.iter().enumerate() {
            // (Aᵀ x)_k sums over in-neighbors; ρ(Aᵀ) = ρ(A)
            let v = x[k] + list.iter().map(|&j| x[j]).sum::<f64>();
            y[k] = v;
            let r = v / x[k];
            lo = lo.min(r);
            hi = hi.max(r);
            norm += v;
        }
        estimate = 0.5 * (lo + hi) - 1.0;
        if hi - lo <= POWER_REL_TOL * hi {
            return Ok(estimate);
        }
        for (xk, yk) in x.iter_mut().zip(&y) {
            *xk = yk / norm;
        }
    }
    Err(Error::PowerIterationStalled {
        iterations: POWER_MAX_ITER,
        estimate,
    })
}

/// Accumulates, for a fixed target vertex, the number and summed weight
/// products of simple 2- and 3-hop paths from every source.
///
/// Reusable across targets to avoid reallocating per agent.
#[derive(Clone, Debug)]
pub struct PathAggregator {
    count2: Vec<u32>,
    sum2: Vec<f64>,
    count: Vec<u32>,
    sum: Vec<f64>,
    target: usize,
}

impl PathAggregator {
    pub fn new(n: usize) -> Self {
        Self {
            count2: vec![0; n],
            sum2: vec![0.0; n],
            count: vec![0; n],
            sum: vec![0.0; n],
            target: usize::MAX,
        }
    }

    pub fn compute(&mut self, g: &DynGraph, target: usize) {
        let n = g.n();
        self.target = target;
        for buf in [&mut self.count2, &mut self.count] {
            buf.clear();
            buf.resize(n, 0);
        }
        for buf in [&mut self.sum2, &mut self.sum] {
            buf.clear();
            buf.resize(n, 0.0);
        }
        let i = target;
        // k → l → i
        for &(l, w_li) in g.in_edges(i) {
            for &(k, w_kl) in g.in_edges(l) {
                if k != i {
                    self.count2[k] += 1;
                    self.sum2[k] += w_kl * w_li;
                }
            }
        }
        // j → k → l → i, including the non-simple j == l case
        for k in 0..n {
            let c2 = self.count2[k];
            if c2 == 0 {
                continue;
            }
            let s2 = self.sum2[k];
            for &(j, w_jk) in g.in_edges(k) {
                if j != i {
                    self.count[j] += c2;
                    self.sum[j] += w_jk * s2;
                }
            }
        }
        // drop l → k → l → i
        for &(l, w_li) in g.in_edges(i) {
            for &(k, w_kl) in g.in_edges(l) {
                if k == i {
                    continue;
                }
                if let Some(w_lk) = g.weight(l, k) {
                    self.count[l] -= 1;
                    self.sum[l] -= w_lk * w_kl * w_li;
                }
            }
        }
        for j in 0..n {
            self.count[j] += self.count2[j];
            self.sum[j] += self.sum2[j];
        }
    }

    #[inline]
    pub fn target(&self) -> usize {
        self.target
    }

    /// Number of simple 2/3-hop paths from `source` to the target.
    #[inline]
    pub fn path_count(&self, source: usize) -> u32 {
        self.count[source]
    }

    /// Average path weight, or `None` when no path exists.
    #[inline]
    pub fn score(&self, source: usize) -> Option<f64> {
        match self.count[source] {
            0 => None,
            c => Some(self.sum[source] / c as f64),
        }
    }
}
