//! Independent reference implementations used by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeSet;

use opinet::engine::StepReport;
use opinet::{DynGraph, KatzParams, SimState};
use rand::Rng;

/// Dense `A[j][i] = 1` iff `j → i`, built from the public edge list.
pub fn dense_adjacency(g: &DynGraph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut a = vec![vec![0.0; n]; n];
    for (from, to, _) in g.edges() {
        a[from][to] = 1.0;
    }
    a
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0.0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

/// Spectral radius by Gelfand's formula, `ρ = lim ‖A^k‖^(1/k)`, with
/// `k = 2^48` reached by repeated squaring.
pub fn gelfand_radius(a: &[Vec<f64>]) -> f64 {
    let amax = |m: &[Vec<f64>]| m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut p = a.to_vec();
    let mut log_scale = 0.0;
    let s = amax(&p);
    if s == 0.0 {
        return 0.0;
    }
    p.iter_mut().flatten().for_each(|v| *v /= s);
    log_scale += s.ln();
    let mut k = 1.0f64;
    for _ in 0..48 {
        p = matmul(&p, &p);
        k *= 2.0;
        log_scale *= 2.0;
        let s = amax(&p);
        if s == 0.0 {
            return 0.0;
        }
        p.iter_mut().flatten().for_each(|v| *v /= s);
        log_scale += s.ln();
    }
    (log_scale / k).exp()
}

/// Katz self-weights from the truncated series `β Σ_{k<K} (α Aᵀ)^k 1`,
/// then max-normalized and clamped.
pub fn katz_neumann(g: &DynGraph, p: &KatzParams, terms: usize) -> Vec<f64> {
    let n = g.n();
    let a = dense_adjacency(g);
    let lambda = gelfand_radius(&a);
    let alpha = if lambda > 1e-12 { p.alpha_fraction / lambda } else { p.alpha_fraction };
    // Horner: x ← β1 + α Aᵀ x
    let mut x = vec![p.beta; n];
    for _ in 1..terms {
        let mut next = vec![p.beta; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += alpha * a[j][i] * x[j];
            }
        }
        x = next;
    }
    let max = x.iter().copied().fold(f64::MIN, f64::max);
    x.iter().map(|v| (v / max).clamp(p.clamp_min, p.clamp_max)).collect()
}

/// Mean product of weights over every simple 2- and 3-hop path `j ⇝ i`,
/// by exhaustive enumeration of intermediate vertices.
pub fn brute_force_trust(g: &DynGraph, j: usize, i: usize) -> Option<f64> {
    let n = g.n();
    let mut products = Vec::new();
    for k in 0..n {
        if k == i || k == j {
            continue;
        }
        if let (Some(a), Some(b)) = (g.weight(j, k), g.weight(k, i)) {
            products.push(a * b);
        }
        for l in 0..n {
            if l == i || l == j || l == k {
                continue;
            }
            if let (Some(a), Some(b), Some(c)) = (g.weight(j, k), g.weight(k, l), g.weight(l, i)) {
                products.push(a * b * c);
            }
        }
    }
    if products.is_empty() {
        None
    } else {
        Some(products.iter().sum::<f64>() / products.len() as f64)
    }
}

/// `atan2(Σ w sin θ, Σ w cos θ)` written out directly.
pub fn circular_mean_direct(pairs: &[(f64, f64)]) -> f64 {
    let s: f64 = pairs.iter().map(|(w, t)| w * t.sin()).sum();
    let c: f64 = pairs.iter().map(|(w, t)| w * t.cos()).sum();
    s.atan2(c)
}

/// Random graph on `n` vertices with edge probability `density` and
/// self-weights in `[0.05, 0.95]`, in-weights normalized.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> DynGraph {
    let mut g = DynGraph::new(n);
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.random_bool(density) {
                g.set_edge(from, to, rng.random_range(0.05..1.0)).unwrap();
            }
        }
    }
    g.set_self_weights((0..n).map(|_| rng.random_range(0.05..0.95)).collect())
        .unwrap();
    g.renormalize_all();
    g
}

/// Weak components by breadth-first search, as a label per vertex.
pub fn weak_labels(g: &DynGraph) -> Vec<usize> {
    let n = g.n();
    let mut adj = vec![Vec::new(); n];
    for (u, v, _) in g.edges() {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut queue = vec![s];
        while let Some(u) = queue.pop() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    queue.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Edges of `g` whose endpoints carry different labels.
pub fn crossing_edges(g: &DynGraph, labels: &[usize]) -> BTreeSet<(usize, usize)> {
    g.edges()
        .into_iter()
        .filter(|&(u, v, _)| labels[u] != labels[v])
        .map(|(u, v, _)| (u, v))
        .collect()
}

/// What the state looked like before a step, for [`check_step`].
pub struct PreStep {
    pub min: f64,
    pub max: f64,
    pub ledger: Vec<((usize, usize), u32)>,
}

impl PreStep {
    pub fn capture(s: &SimState) -> Self {
        let theta = &s.opinions.theta;
        Self {
            min: theta.iter().copied().fold(f64::INFINITY, f64::min),
            max: theta.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ledger: s.ledger.iter().collect(),
        }
    }
}

/// Checks the end-of-step invariants. Returns a description of the first
/// violation.
pub fn check_step(pre: &PreStep, s: &SimState, report: &StepReport) -> Result<(), String> {
    let theta = &s.opinions.theta;
    let t = s.t();
    // opinions stay inside the hull of the previous step
    for (i, &x) in theta.iter().enumerate() {
        if x < pre.min - 1e-12 || x > pre.max + 1e-12 {
            return Err(format!("t={t}: agent {i} at {x} left [{}, {}]", pre.min, pre.max));
        }
    }
    let g = &s.graph;
    for i in 0..g.n() {
        let ins = g.in_edges(i);
        if ins.is_empty() {
            continue;
        }
        let total: f64 = ins.iter().map(|e| e.1).sum::<f64>() + g.self_weight(i);
        if (total - 1.0).abs() > 1e-9 {
            return Err(format!("t={t}: weights into {i} sum to {total}"));
        }
    }
    for (j, i, _) in g.edges() {
        let gap = (theta[i] - theta[j]).abs();
        if gap > s.agents[i].tolerance {
            return Err(format!("t={t}: edge {j}->{i} spans {gap} > tolerance {}", s.agents[i].tolerance));
        }
    }
    let promoted: BTreeSet<(usize, usize)> = report.promoted.iter().copied().collect();
    for &((i, j), before) in &pre.ledger {
        let after = s.ledger.get(i, j);
        if after < before && !(after == 0 && promoted.contains(&(j, i))) {
            return Err(format!("t={t}: ledger ({i},{j}) fell from {before} to {after} without promotion"));
        }
    }
    Ok(())
}
