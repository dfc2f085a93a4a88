//! Edge cut-sets between an evolving network and its converged form.
//!
//! `E_cs(t)` is the set of edges of `G(t)` whose endpoints end up in
//! different weak components of the converged network `G(t_f)`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{DynGraph, Edge, Partition};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutsetReport {
    pub t: u32,
    pub final_partition: Partition,
    pub cut_edges: BTreeSet<Edge>,
    pub responsible_agents: BTreeSet<usize>,
}

impl CutsetReport {
    pub fn size(&self) -> usize {
        self.cut_edges.len()
    }
}

/// Cut-set of `g_t` against the weak components of `g_final`.
pub fn edge_cutset(t: u32, g_t: &DynGraph, g_final: &DynGraph) -> Result<CutsetReport> {
    let partition = g_final.weakly_connected_components();
    cutset_against(t, g_t, partition)
}

fn cutset_against(t: u32, g_t: &DynGraph, partition: Partition) -> Result<CutsetReport> {
    if g_t.n() != partition.labels.len() {
        return Err(Error::VertexMismatch {
            left: g_t.n(),
            right: partition.labels.len(),
        });
    }
    let cut_edges: BTreeSet<Edge> = g_t
        .edge_set()
        .into_iter()
        .filter(|&(u, v)| !partition.same_block(u, v))
        .collect();
    let responsible_agents = cut_edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    Ok(CutsetReport {
        t,
        final_partition: partition,
        cut_edges,
        responsible_agents,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutsetTimeline {
    pub reports: Vec<CutsetReport>,
    /// `E_cs(t') ⊆ E_cs(t)` for every pair of snapshots with `t' > t`.
    pub monotone: bool,
    /// Per report: subset of the previous report's cut-set (true for the first).
    pub stepwise_monotone: Vec<bool>,
    /// The last report's cut-set is empty.
    pub final_empty: bool,
}

impl CutsetTimeline {
    /// Index of the largest cut-set (first on ties).
    pub fn largest(&self) -> Option<usize> {
        self.reports
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.size().cmp(&b.1.size()).then(b.0.cmp(&a.0)))
            .map(|(k, _)| k)
    }
}

/// One report per snapshot, all against the partition of `g_final`.
pub fn cutset_timeline<'a, I>(history: I, g_final: &DynGraph) -> Result<CutsetTimeline>
where
    I: IntoIterator<Item = (u32, &'a DynGraph)>,
{
    let partition = g_final.weakly_connected_components();
    let reports = history
        .into_iter()
        .map(|(t, g)| cutset_against(t, g, partition.clone()))
        .collect::<Result<Vec<_>>>()?;
    let stepwise_monotone: Vec<bool> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| k == 0 || r.cut_edges.is_subset(&reports[k - 1].cut_edges))
        .collect();
    // subset is transitive, so the pairwise property reduces to stepwise
    let monotone = stepwise_monotone.iter().all(|&m| m);
    let final_empty = reports.last().is_none_or(|r| r.cut_edges.is_empty());
    Ok(CutsetTimeline {
        reports,
        monotone,
        stepwise_monotone,
        final_empty,
    })
}

/// Checks that the cut-set of `g_t` is exactly the set of edges crossing the
/// partition: removing all of it leaves no crossing edge, and putting any
/// single edge back restores one.
pub fn is_unique_minimal(report: &CutsetReport, g_t: &DynGraph) -> bool {
    let crossing = |g: &DynGraph| {
        g.edge_set()
            .into_iter()
            .any(|(u, v)| !report.final_partition.same_block(u, v))
    };
    let mut pruned = g_t.clone();
    for &(u, v) in &report.cut_edges {
        pruned.remove_edge(u, v);
    }
    if crossing(&pruned) {
        return false;
    }
    report.cut_edges.iter().all(|&(u, v)| {
        let mut g = pruned.clone();
        g.set_edge(u, v, g_t.weight(u, v).unwrap_or(1.0)).is_ok() && crossing(&g)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(usize, usize)]) -> DynGraph {
        DynGraph::from_edges(n, edges.iter().map(|&(a, b)| (a, b, 0.5))).unwrap()
    }

    #[test]
    fn hand_example() {
        let gt = g(4, &[(0, 1), (1, 0), (1, 2), (2, 3)]);
        let gf = g(4, &[(0, 1), (1, 0), (2, 3)]);
        let r = edge_cutset(0, &gt, &gf).unwrap();
        assert_eq!(r.cut_edges, BTreeSet::from([(1, 2)]));
        assert_eq!(r.responsible_agents, BTreeSet::from([1, 2]));
        assert!(is_unique_minimal(&r, &gt));
    }

    #[test]
    fn converged_graph_has_no_cut() {
        let gf = g(4, &[(0, 1), (2, 3)]);
        assert!(edge_cutset(5, &gf, &gf).unwrap().cut_edges.is_empty());
    }

    #[test]
    fn single_final_component_has_no_cut() {
        let gt = g(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let gf = g(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(edge_cutset(0, &gt, &gf).unwrap().cut_edges.is_empty());
    }

    #[test]
    fn vertex_mismatch() {
        assert!(matches!(
            edge_cutset(0, &DynGraph::new(3), &DynGraph::new(4)),
            Err(Error::VertexMismatch { .. })
        ));
    }

    #[test]
    fn constant_history_is_monotone() {
        let gt = g(4, &[(0, 1), (1, 2), (2, 3)]);
        let gf = g(4, &[(0, 1), (2, 3)]);
        let hist = [(0, &gt), (1, &gt), (2, &gt)];
        let tl = cutset_timeline(hist, &gf).unwrap();
        assert!(tl.monotone);
        assert!(tl.reports.iter().all(|r| r.cut_edges == tl.reports[0].cut_edges));
        assert!(!tl.final_empty);
    }

    #[test]
    fn shrinking_chain() {
        let g0 = g(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let g1 = g(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (5, 0)]);
        let gf = g(6, &[(0, 1), (3, 4), (4, 5)]);
        let tl = cutset_timeline([(0, &g0), (5, &g1), (9, &gf)], &gf).unwrap();
        assert!(tl.monotone && tl.final_empty);
        let sizes: Vec<_> = tl.reports.iter().map(CutsetReport::size).collect();
        assert_eq!(sizes, vec![3, 2, 0]);
        assert_eq!(tl.largest(), Some(0));
    }

    #[test]
    fn new_crossing_edge_breaks_monotonicity() {
        let g0 = g(4, &[(0, 1), (2, 3)]);
        let g1 = g(4, &[(0, 1), (2, 3), (1, 2)]);
        let gf = g(4, &[(0, 1), (2, 3)]);
        let tl = cutset_timeline([(0, &g0), (1, &g1), (2, &gf)], &gf).unwrap();
        assert!(!tl.monotone);
        assert_eq!(tl.stepwise_monotone, vec![true, false, true]);
    }
}
