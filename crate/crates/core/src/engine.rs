//! Coupled opinion/network dynamics.
//!
//! One time unit visits every agent once in a fresh random order. Each agent
//! averages its own opinion with in-tolerance direct ties and a random subset
//! of in-tolerance 2/3-hop contacts. After all updates, non-direct contacts
//! that were sampled often enough are promoted to direct ties, then direct
//! ties that fell out of tolerance are dropped. Self-weights follow Katz
//! centrality whenever the edge set changes.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use nalgebra::DMatrix;

use crate::graph::{DynGraph, Edge, KatzParams};
use crate::opinion::{weighted_unit_mean, within_tolerance, AgentParams, OpinionState};

/// Which opinion vector agents read during a time unit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Later agents see opinions already updated earlier in the same unit.
    #[default]
    InPlace,
    /// Everyone reads the opinions from the start of the unit.
    Frozen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineParams {
    /// Inclusion probability of each non-direct contact in the sampled subset.
    pub p_nd: f64,
    pub katz: KatzParams,
    /// Convergence threshold on the largest per-agent opinion change (radians).
    pub eps: f64,
    pub t_max: u32,
    pub update_mode: UpdateMode,
    /// Record a snapshot every `k` steps; `None` disables history.
    pub snapshot_every: Option<u32>,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            p_nd: 0.5,
            katz: KatzParams::default(),
            eps: 1e-6,
            t_max: 250,
            update_mode: UpdateMode::InPlace,
            snapshot_every: None,
        }
    }
}

/// An agent's contact sets at one step. All lists are sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Neighborhood {
    pub direct: Vec<usize>,
    pub nondirect: Vec<usize>,
    pub sampled: Vec<usize>,
}

/// Cumulative sampled-interaction counts keyed by `(listener, contact)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InteractionLedger {
    n: usize,
    counts: Vec<u32>,
    nonzero: usize,
}

impl InteractionLedger {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
            nonzero: 0,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    pub fn increment(&mut self, i: usize, j: usize) -> u32 {
        let c = &mut self.counts[i * self.n + j];
        if *c == 0 {
            self.nonzero += 1;
        }
        *c += 1;
        *c
    }

    pub fn remove(&mut self, i: usize, j: usize) -> Option<u32> {
        let c = std::mem::take(&mut self.counts[i * self.n + j]);
        if c == 0 {
            return None;
        }
        self.nonzero -= 1;
        Some(c)
    }

    /// Non-zero entries in `(listener, contact)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), u32)> + '_ {
        let n = self.n;
        self.counts
            .iter()
            .enumerate()
            .filter(|e| *e.1 > 0)
            .map(move |(k, &c)| ((k / n, k % n), c))
    }

    pub fn len(&self) -> usize {
        self.nonzero
    }

    pub fn is_empty(&self) -> bool {
        self.nonzero == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: u32,
    pub theta: Vec<f64>,
    pub graph: DynGraph,
}

/// What happened during one call to [`SimState::step`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub max_change: f64,
    pub promoted: Vec<Edge>,
    pub removed: Vec<Edge>,
}

impl StepReport {
    pub fn edges_changed(&self) -> bool {
        !self.promoted.is_empty() || !self.removed.is_empty()
    }
}

/// Walk tables of one network revision.
///
/// When `j → i` is not an edge, every 2- or 3-walk from `j` to `i` is a
/// simple path (a repeated vertex would need `j → i` or a self-loop), so
/// for non-neighbors the path count is `[(I + A) A²]_ji` and the summed
/// weight product is `[(I + W) W²]_ji`. Sparse-complement networks (few
/// non-edges) evaluate the outer product per queried pair instead of as a
/// full matrix product, memoized for the revision.
#[derive(Clone, Debug, Default)]
struct WalkCache {
    revision: u64,
    n: usize,
    w: DMatrix<f64>,
    w2: DMatrix<f64>,
    w2_ready: bool,
    /// Full `(I + A) A²` and `(I + W) W²` are current.
    full: bool,
    a: DMatrix<f32>,
    a2: DMatrix<f32>,
    counts: DMatrix<f32>,
    sums: DMatrix<f64>,
    out: Vec<Vec<(usize, f64)>>,
    generation: u32,
    count_gen: Vec<u32>,
    count_memo: Vec<f32>,
    score_gen: Vec<u32>,
    score_memo: Vec<f64>,
}

impl WalkCache {
    fn refresh(&mut self, g: &DynGraph) {
        let n = g.n();
        if self.revision == g.revision() && self.n == n {
            return;
        }
        if self.n != n || self.w.nrows() != n {
            *self = Self {
                n,
                w: DMatrix::zeros(n, n),
                w2: DMatrix::zeros(n, n),
                a: DMatrix::zeros(n, n),
                a2: DMatrix::zeros(n, n),
                counts: DMatrix::zeros(n, n),
                sums: DMatrix::zeros(n, n),
                out: vec![Vec::new(); n],
                count_gen: vec![0; n * n],
                count_memo: vec![0.0; n * n],
                score_gen: vec![0; n * n],
                score_memo: vec![0.0; n * n],
                ..Self::default()
            };
        }
        self.a.fill(0.0);
        self.w.fill(0.0);
        self.out.iter_mut().for_each(Vec::clear);
        let mut edges = 0;
        for i in 0..n {
            for &(j, wt) in g.in_edges(i) {
                self.a[(j, i)] = 1.0;
                self.w[(j, i)] = wt;
                self.out[j].push((i, wt));
                edges += 1;
            }
        }
        // counts are small integers, exact in f32
        self.a.mul_to(&self.a, &mut self.a2);
        self.w2_ready = false;
        // per-pair work ~ non-edges × out-degree, versus ~n³ for the products
        let non_edges = n * n.saturating_sub(1) - edges;
        let per_pair = non_edges * (edges / n.max(1) + 1);
        self.full = 8 * per_pair > n * n * n;
        if self.full {
            self.counts.copy_from(&self.a2);
            self.counts.gemm(1.0, &self.a, &self.a2, 1.0);
            self.ensure_w2();
            self.sums.copy_from(&self.w2);
            self.sums.gemm(1.0, &self.w, &self.w2, 1.0);
        } else {
            self.generation = self.generation.wrapping_add(1);
            if self.generation == 0 {
                self.count_gen.fill(0);
                self.score_gen.fill(0);
                self.generation = 1;
            }
        }
        self.revision = g.revision();
    }

    fn ensure_w2(&mut self) {
        if !self.w2_ready {
            self.w.mul_to(&self.w, &mut self.w2);
            self.w2_ready = true;
        }
    }

    /// Number of simple 2/3-hop paths `j ⇝ i`; `j → i` must not be an edge.
    fn path_count(&mut self, j: usize, i: usize) -> f32 {
        if self.full {
            return self.counts[(j, i)];
        }
        let n = self.n;
        let key = i * n + j;
        if self.count_gen[key] != self.generation {
            let col = &self.a2.as_slice()[i * n..(i + 1) * n];
            self.count_memo[key] = col[j] + self.out[j].iter().map(|&(k, _)| col[k]).sum::<f32>();
            self.count_gen[key] = self.generation;
        }
        self.count_memo[key]
    }

    /// Mean weight product over the simple 2/3-hop paths `j ⇝ i`; `j → i`
    /// must not be an edge.
    fn score(&mut self, j: usize, i: usize) -> Option<f64> {
        let count = self.path_count(j, i);
        if count == 0.0 {
            return None;
        }
        if self.full {
            return Some(self.sums[(j, i)] / f64::from(count));
        }
        let n = self.n;
        let key = i * n + j;
        if self.score_gen[key] != self.generation {
            self.ensure_w2();
            let col = &self.w2.as_slice()[i * n..(i + 1) * n];
            let sum = col[j] + self.out[j].iter().map(|&(k, w)| w * col[k]).sum::<f64>();
            self.score_memo[key] = sum / f64::from(count);
            self.score_gen[key] = self.generation;
        }
        Some(self.score_memo[key])
    }
}

/// Complete state of one simulation run.
#[derive(Clone, Debug)]
pub struct SimState {
    pub opinions: OpinionState,
    pub graph: DynGraph,
    pub agents: Vec<AgentParams>,
    pub ledger: InteractionLedger,
    pub rng: ChaCha8Rng,
    pub history: Vec<Snapshot>,
    pub params: EngineParams,
    frozen: Vec<f64>,
    order: Vec<usize>,
    walks: WalkCache,
    /// `(sin, cos)` of the opinion value in `unit_of`.
    units: Vec<(f64, f64)>,
    unit_of: Vec<f64>,
    scratch: Neighborhood,
    score_buf: Vec<f64>,
    marker: Vec<usize>,
    stamp: usize,
}

impl SimState {
    pub fn new(
        theta: Vec<f64>,
        agents: Vec<AgentParams>,
        graph: DynGraph,
        params: EngineParams,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let n = theta.len();
        if agents.len() != n {
            return Err(Error::VertexMismatch { left: n, right: agents.len() });
        }
        if graph.n() != n {
            return Err(Error::VertexMismatch { left: n, right: graph.n() });
        }
        if !(0.0..=1.0).contains(&params.p_nd) {
            return Err(Error::InvalidInput(format!("p_nd {} outside [0, 1]", params.p_nd)));
        }
        let mut agents = agents;
        for (a, &w) in agents.iter_mut().zip(graph.self_weights()) {
            a.self_weight = w;
        }
        let mut state = Self {
            opinions: OpinionState::new(theta),
            graph,
            agents,
            ledger: InteractionLedger::new(n),
            rng,
            history: Vec::new(),
            params,
            frozen: Vec::new(),
            order: (0..n).collect(),
            walks: WalkCache::default(),
            units: vec![(0.0, 1.0); n],
            unit_of: vec![0.0; n],
            scratch: Neighborhood::default(),
            score_buf: Vec::new(),
            marker: vec![0; n],
            stamp: 0,
        };
        if state.params.snapshot_every.is_some() {
            state.record_snapshot();
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.opinions.len()
    }

    pub fn t(&self) -> u32 {
        self.opinions.t
    }

    /// Computes the contact sets of agent `i`, drawing the sampled subset
    /// from the run's rng.
    pub fn compute_neighborhood(&mut self, i: usize) -> Neighborhood {
        let mut nb = Neighborhood::default();
        self.fill_neighborhood(i, &mut nb);
        nb
    }

    fn fill_neighborhood(&mut self, i: usize, nb: &mut Neighborhood) {
        nb.direct.clear();
        nb.nondirect.clear();
        nb.sampled.clear();
        if self.params.update_mode == UpdateMode::Frozen && self.frozen.len() != self.n() {
            self.frozen = self.opinions.theta.clone();
        }
        self.walks.refresh(&self.graph);
        self.stamp += 1;
        let stamp = self.stamp;

        let tol = self.agents[i].tolerance;
        let theta = match self.params.update_mode {
            UpdateMode::InPlace => &self.opinions.theta,
            UpdateMode::Frozen => &self.frozen,
        };
        let theta_i = theta[i];

        for &(j, _) in self.graph.in_edges(i) {
            self.marker[j] = stamp;
            if within_tolerance(theta_i, theta[j], tol) {
                nb.direct.push(j);
            }
        }
        for j in 0..theta.len() {
            if j == i || self.marker[j] == stamp || !within_tolerance(theta_i, theta[j], tol) {
                continue;
            }
            if self.walks.path_count(j, i) > 0.0 {
                nb.nondirect.push(j);
            }
        }
        let p = self.params.p_nd;
        for &j in &nb.nondirect {
            if self.rng.random_bool(p) {
                nb.sampled.push(j);
            }
        }
    }

    /// Moves agent `i` to the weighted circular mean of itself, its direct
    /// ties and its sampled non-direct contacts. Returns the new opinion.
    pub fn update_agent(&mut self, i: usize) -> f64 {
        let mut nb = std::mem::take(&mut self.scratch);
        self.fill_neighborhood(i, &mut nb);
        let new = self.mean_opinion(i, &nb);
        for &j in &nb.sampled {
            self.ledger.increment(i, j);
        }
        self.scratch = nb;
        self.opinions.theta[i] = new;
        new
    }

    fn mean_opinion(&mut self, i: usize, nb: &Neighborhood) -> f64 {
        if nb.direct.is_empty() && nb.sampled.is_empty() {
            return self.opinions.theta[i];
        }
        let theta = match self.params.update_mode {
            UpdateMode::InPlace => &self.opinions.theta,
            UpdateMode::Frozen => &self.frozen,
        };
        for &j in std::iter::once(&i).chain(&nb.direct).chain(&nb.sampled) {
            if self.unit_of[j].to_bits() != theta[j].to_bits() {
                self.unit_of[j] = theta[j];
                self.units[j] = theta[j].sin_cos();
            }
        }
        let mut scores = std::mem::take(&mut self.score_buf);
        scores.clear();
        for &j in &nb.sampled {
            scores.push(self.walks.score(j, i).expect("sampled contact has a path"));
        }
        let walks = &self.walks;
        let units = &self.units;
        let own = (self.graph.self_weight(i), units[i]);
        let direct = nb.direct.iter().map(|&j| (walks.w[(j, i)], units[j]));
        let sampled = nb.sampled.iter().zip(&scores).map(|(&j, &w)| (w, units[j]));
        let new = weighted_unit_mean(std::iter::once(own).chain(direct).chain(sampled))
            .expect("self-weight is positive");
        self.score_buf = scores;
        new
    }

    /// Promotes every ledger pair whose count exceeds the listener's
    /// sociability index. Initial trust is the current 2/3-hop score.
    pub fn apply_tie_gain(&mut self) -> Vec<Edge> {
        let due: Vec<(usize, usize)> = self
            .ledger
            .iter()
            .filter(|&((i, _), c)| f64::from(c) > self.agents[i].sociability_index())
            .map(|(k, _)| k)
            .collect();
        if due.is_empty() {
            return Vec::new();
        }
        // scores come from the network as it stood before any promotion
        self.walks.refresh(&self.graph);
        let mut initial = Vec::with_capacity(due.len());
        for &(i, j) in &due {
            let score = if self.graph.has_edge(j, i) {
                self.graph.nondirect_trust_score(j, i).ok()
            } else {
                self.walks.score(j, i)
            };
            let w = score.unwrap_or_else(|| {
                self.graph
                    .in_edges(i)
                    .iter()
                    .map(|e| e.1)
                    .reduce(f64::min)
                    .unwrap_or(1.0 - self.graph.self_weight(i))
            });
            initial.push(w);
        }
        let mut promoted = Vec::with_capacity(due.len());
        for (&(i, j), w) in due.iter().zip(initial) {
            self.ledger.remove(i, j);
            if self.graph.has_edge(j, i) {
                continue;
            }
            self.graph.set_edge(j, i, w).expect("valid promoted edge");
            self.graph.renormalize_in_weights(i);
            promoted.push((j, i));
        }
        promoted
    }

    /// Drops every direct tie `j → i` with `|θ_i − θ_j| > tol_i`.
    pub fn apply_tie_loss(&mut self) -> Vec<Edge> {
        let mut removed = Vec::new();
        for i in 0..self.n() {
            let theta = &self.opinions.theta;
            let tol = self.agents[i].tolerance;
            let theta_i = theta[i];
            let gone = self
                .graph
                .retain_in_edges(i, |j| within_tolerance(theta_i, theta[j], tol));
            if !gone.is_empty() {
                self.graph.renormalize_in_weights(i);
                removed.extend(gone.into_iter().map(|j| (j, i)));
            }
        }
        removed.sort_unstable();
        removed
    }

    /// Recomputes Katz self-weights and renormalizes every in-weight list.
    pub fn refresh_self_weights(&mut self) -> Result<()> {
        let w = self.graph.katz_self_weights(&self.params.katz)?;
        for (a, &x) in self.agents.iter_mut().zip(&w) {
            a.self_weight = x;
        }
        self.graph.set_self_weights(w)?;
        self.graph.renormalize_all();
        Ok(())
    }

    /// Advances the state by one time unit.
    pub fn step(&mut self) -> Result<StepReport> {
        let before = self.opinions.theta.clone();
        if self.params.update_mode == UpdateMode::Frozen {
            self.frozen.clone_from(&self.opinions.theta);
        }
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(&mut self.rng);
        for &i in &order {
            self.update_agent(i);
        }
        self.order = order;

        let promoted = self.apply_tie_gain();
        let removed = self.apply_tie_loss();
        let report = StepReport {
            max_change: before
                .iter()
                .zip(&self.opinions.theta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            promoted,
            removed,
        };
        if report.edges_changed() {
            self.refresh_self_weights()?;
        }
        self.opinions.t += 1;
        if let Some(k) = self.params.snapshot_every {
            if k > 0 && self.opinions.t % k == 0 {
                self.record_snapshot();
            }
        }
        Ok(report)
    }

    /// Steps until the largest opinion change is at most `eps` and the edge
    /// set did not change, or until `t_max`. Returns the convergence step.
    pub fn run_to_convergence(&mut self) -> Result<Option<u32>> {
        let eps = self.params.eps;
        let t_max = self.params.t_max;
        let mut converged = None;
        while self.t() < t_max {
            let report = self.step()?;
            if report.max_change <= eps && !report.edges_changed() {
                converged = Some(self.t());
                break;
            }
        }
        if self.params.snapshot_every.is_some()
            && self.history.last().map(|s| s.t) != Some(self.t())
        {
            self.record_snapshot();
        }
        Ok(converged)
    }

    pub fn record_snapshot(&mut self) {
        self.history.push(Snapshot {
            t: self.t(),
            theta: self.opinions.theta.clone(),
            graph: self.graph.clone(),
        });
    }
}
