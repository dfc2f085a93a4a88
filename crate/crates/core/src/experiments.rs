//! Population recipes, initial networks and seeded Monte Carlo sweeps.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{EngineParams, SimState, UpdateMode};
use crate::error::{Error, Result};
use crate::graph::{DynGraph, Edge, KatzParams};
use crate::opinion::{
    deg_to_rad, opinion_range, sample_truncated_gaussian, within_tolerance, AgentKind, AgentParams,
};

/// Largest initial spread still classed as a conservative group.
pub const CONSERVATIVE_MAX_SIGMA_DEG: f64 = 15.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Conservative,
    Liberal,
}

impl GroupKind {
    pub fn from_sigma_deg(sigma: f64) -> Self {
        if sigma <= CONSERVATIVE_MAX_SIGMA_DEG {
            GroupKind::Conservative
        } else {
            GroupKind::Liberal
        }
    }
}

/// One population recipe. Angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationSpec {
    pub n: usize,
    pub mu_deg: f64,
    pub sigma_deg: f64,
    pub rigid_fraction: f64,
    pub theta_r_deg: f64,
    pub theta_f_deg: f64,
}

impl PopulationSpec {
    pub fn group_kind(&self) -> GroupKind {
        GroupKind::from_sigma_deg(self.sigma_deg)
    }

    pub fn rigid_count(&self) -> usize {
        (self.rigid_fraction * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "population must have at least one agent"));
        }
        if !(0.0..=1.0).contains(&self.rigid_fraction) {
            return Err(Error::config("rigid_fraction", format!("{} outside [0, 1]", self.rigid_fraction)));
        }
        if !(self.sigma_deg > 0.0) {
            return Err(Error::config("sigma_deg", format!("{} must be positive", self.sigma_deg)));
        }
        if !(self.mu_deg > 0.0 && self.mu_deg < 180.0) {
            return Err(Error::config("mu_deg", format!("{} outside (0, 180)", self.mu_deg)));
        }
        if !(self.theta_r_deg >= 0.0) {
            return Err(Error::config("theta_R_deg", format!("{} must be non-negative", self.theta_r_deg)));
        }
        if !(self.theta_f_deg > self.theta_r_deg) {
            return Err(Error::config(
                "theta_F_deg",
                format!("{} must exceed theta_R_deg {}", self.theta_f_deg, self.theta_r_deg),
            ));
        }
        Ok(())
    }
}

/// Sweep grid plus per-run parameters. Grid axes are in degrees; `eps` and
/// `consensus_delta` are radians.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub n: usize,
    pub mu_deg: f64,
    pub sigma_deg: Vec<f64>,
    pub theta_r_deg: Vec<f64>,
    pub theta_f_deg: Vec<f64>,
    pub rigid_fraction: Vec<f64>,
    pub runs_per_cell: usize,
    pub base_seed: u64,
    pub out_degree_cap: usize,
    pub k_c: f64,
    pub consensus_delta: f64,
    pub eps: f64,
    pub t_max: u32,
    pub p_nd: f64,
    pub katz: KatzParams,
    pub update_mode: UpdateMode,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n: 100,
            mu_deg: 90.0,
            sigma_deg: vec![10.0, 15.0, 20.0, 25.0],
            theta_r_deg: vec![10.0, 30.0],
            theta_f_deg: vec![40.0, 80.0],
            rigid_fraction: (0..=10).map(|k| k as f64 / 10.0).collect(),
            runs_per_cell: 100,
            base_seed: 0,
            out_degree_cap: 25,
            k_c: 100.0,
            consensus_delta: deg_to_rad(0.1),
            eps: 1e-6,
            t_max: 250,
            p_nd: 0.5,
            katz: KatzParams::default(),
            update_mode: UpdateMode::InPlace,
        }
    }
}

/// One point of the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub population: PopulationSpec,
}

impl ExperimentSpec {
    /// Grid cells, σ outermost and rigid fraction innermost.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &sigma_deg in &self.sigma_deg {
            for &theta_r_deg in &self.theta_r_deg {
                for &theta_f_deg in &self.theta_f_deg {
                    for &rigid_fraction in &self.rigid_fraction {
                        out.push(Cell {
                            index: out.len(),
                            population: PopulationSpec {
                                n: self.n,
                                mu_deg: self.mu_deg,
                                sigma_deg,
                                rigid_fraction,
                                theta_r_deg,
                                theta_f_deg,
                            },
                        });
                    }
                }
            }
        }
        out
    }

    pub fn engine_params(&self) -> EngineParams {
        EngineParams {
            p_nd: self.p_nd,
            katz: self.katz,
            eps: self.eps,
            t_max: self.t_max,
            update_mode: self.update_mode,
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_cell == 0 {
            return Err(Error::config("runs_per_cell", "must be at least 1"));
        }
        if self.out_degree_cap == 0 {
            return Err(Error::config("out_degree_cap", "must be at least 1"));
        }
        if !(self.k_c > 0.0) {
            return Err(Error::config("k_c", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_nd) {
            return Err(Error::config("p_nd", format!("{} outside [0, 1]", self.p_nd)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::config("eps_deg", "must be non-negative"));
        }
        if !(self.consensus_delta >= 0.0) {
            return Err(Error::config("consensus_delta_deg", "must be non-negative"));
        }
        if self.t_max == 0 {
            return Err(Error::config("t_max", "must be at least 1"));
        }
        let k = &self.katz;
        if !(k.beta > 0.0) {
            return Err(Error::config("katz_beta", "must be positive"));
        }
        if !(k.alpha_fraction > 0.0 && k.alpha_fraction < 1.0) {
            return Err(Error::config("katz_alpha_fraction", "must lie in (0, 1)"));
        }
        if !(k.clamp_min > 0.0 && k.clamp_min <= k.clamp_max && k.clamp_max < 1.0) {
            return Err(Error::config(
                "self_weight_clamp",
                "bounds must satisfy 0 < min <= max < 1",
            ));
        }
        for cell in self.cells() {
            cell.population.validate()?;
        }
        Ok(())
    }
}

/// Order-free seed for `(cell, run)`: a SplitMix64 chain over the three
/// inputs, so evaluation order never matters.
pub fn derive_seed(base_seed: u64, cell: usize, run: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base_seed) ^ cell as u64) ^ run as u64)
}

/// Samples opinions and assigns a uniformly random rigid subset.
pub fn build_population<R: Rng + ?Sized>(
    spec: &PopulationSpec,
    k_c: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<AgentParams>)> {
    spec.validate()?;
    let theta = sample_truncated_gaussian(
        deg_to_rad(spec.mu_deg),
        deg_to_rad(spec.sigma_deg),
        spec.n,
        rng,
    )?;
    let mut idx: Vec<usize> = (0..spec.n).collect();
    idx.shuffle(rng);
    let mut agents = vec![AgentParams::new(AgentKind::Flexible, deg_to_rad(spec.theta_f_deg), k_c); spec.n];
    for &i in &idx[..spec.rigid_count()] {
        agents[i] = AgentParams::new(AgentKind::Rigid, deg_to_rad(spec.theta_r_deg), k_c);
    }
    Ok((theta, agents))
}

/// Admissible influence edges in random order, each kept while its source
/// is under the out-degree cap; random trust scores; Katz self-weights.
pub fn build_initial_network<R: Rng + ?Sized>(
    theta: &[f64],
    agents: &[AgentParams],
    cap: usize,
    katz: &KatzParams,
    rng: &mut R,
) -> Result<DynGraph> {
    let n = theta.len();
    if agents.len() != n {
        return Err(Error::VertexMismatch { left: n, right: agents.len() });
    }
    if cap == 0 {
        return Err(Error::InvalidInput("out-degree cap must be at least 1".into()));
    }
    let mut candidates: Vec<Edge> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && within_tolerance(theta[i], theta[j], agents[i].tolerance) {
                candidates.push((j, i));
            }
        }
    }
    candidates.shuffle(rng);
    let mut out_degree = vec![0usize; n];
    let mut g = DynGraph::new(n);
    for (j, i) in candidates {
        if out_degree[j] < cap {
            out_degree[j] += 1;
            // (0, 1]: keeps every trust score strictly positive
            let w = 1.0 - rng.random::<f64>();
            g.set_edge(j, i, w)?;
        }
    }
    let w = g.katz_self_weights(katz)?;
    g.set_self_weights(w)?;
    g.renormalize_all();
    Ok(g)
}

/// One weak component and an opinion spread of at most `delta` radians.
pub fn consensus_of(state: &SimState, delta: f64) -> bool {
    state.graph.weakly_connected_components().len() == 1 && state.opinions.range() <= delta
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub converged_at: Option<u32>,
    pub n_components: usize,
    pub consensus: bool,
    pub final_opinions: Vec<f64>,
    pub final_range: f64,
    /// No edge gained during the run crosses the final partition, i.e. the
    /// cut-set never grows.
    pub cutset_monotone: bool,
}

/// Builds the initial simulation state for one cell and seed.
pub fn setup_run(spec: &ExperimentSpec, pop: &PopulationSpec, seed: u64) -> Result<SimState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (theta, agents) = build_population(pop, spec.k_c, &mut rng)?;
    let graph = build_initial_network(&theta, &agents, spec.out_degree_cap, &spec.katz, &mut rng)?;
    SimState::new(theta, agents, graph, spec.engine_params(), rng)
}

/// Runs a prepared state to convergence and summarizes it.
pub fn finish_run(state: &mut SimState, seed: u64, delta: f64) -> Result<RunResult> {
    let mut gained: BTreeSet<Edge> = BTreeSet::new();
    let eps = state.params.eps;
    let mut converged_at = None;
    while state.t() < state.params.t_max {
        let report = state.step()?;
        gained.extend(
            report
                .promoted
                .iter()
                .filter(|&&(j, i)| state.graph.has_edge(j, i)),
        );
        if report.max_change <= eps && !report.edges_changed() {
            converged_at = Some(state.t());
            break;
        }
    }
    if state.params.snapshot_every.is_some() && state.history.last().map(|s| s.t) != Some(state.t()) {
        state.record_snapshot();
    }
    let partition = state.graph.weakly_connected_components();
    let cutset_monotone = gained.iter().all(|&(u, v)| partition.same_block(u, v));
    Ok(RunResult {
        seed,
        converged_at,
        n_components: partition.len(),
        // a run still moving at t_max counts as no consensus
        consensus: converged_at.is_some() && consensus_of(state, delta),
        final_opinions: state.opinions.theta.clone(),
        final_range: opinion_range(&state.opinions.theta),
        cutset_monotone,
    })
}

/// Like [`run_single`] but keeps a snapshot every `snapshot_every` steps,
/// plus the initial and final states. Returns the finished state with its
/// history.
pub fn run_recorded(
    spec: &ExperimentSpec,
    cell: &Cell,
    run: usize,
    snapshot_every: u32,
) -> Result<(RunResult, SimState)> {
    if snapshot_every == 0 {
        return Err(Error::config("snapshot_every", "must be at least 1"));
    }
    let seed = derive_seed(spec.base_seed, cell.index, run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pop = &cell.population;
    let (theta, agents) = build_population(pop, spec.k_c, &mut rng)?;
    let graph = build_initial_network(&theta, &agents, spec.out_degree_cap, &spec.katz, &mut rng)?;
    let params = EngineParams {
        snapshot_every: Some(snapshot_every),
        ..spec.engine_params()
    };
    let mut state = SimState::new(theta, agents, graph, params, rng)?;
    let result = finish_run(&mut state, seed, spec.consensus_delta)?;
    Ok((result, state))
}

pub fn run_single(spec: &ExperimentSpec, cell: &Cell, run: usize) -> Result<RunResult> {
    let seed = derive_seed(spec.base_seed, cell.index, run);
    let mut state = setup_run(spec, &cell.population, seed)?;
    finish_run(&mut state, seed, spec.consensus_delta)
}

/// Aggregate for one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub population: PopulationSpec,
    pub runs: usize,
    pub consensus_count: usize,
    pub consensus_rate: f64,
    pub mean_components: f64,
    /// Mean convergence step, non-converged runs counted at `t_max`.
    pub mean_t_conv: f64,
    pub converged_count: usize,
    pub non_monotone_runs: usize,
}

pub fn summarize(population: PopulationSpec, results: &[RunResult], t_max: u32) -> SweepRow {
    let runs = results.len();
    let consensus_count = results.iter().filter(|r| r.consensus).count();
    let denom = runs.max(1) as f64;
    SweepRow {
        population,
        runs,
        consensus_count,
        consensus_rate: consensus_count as f64 / denom,
        mean_components: results.iter().map(|r| r.n_components as f64).sum::<f64>() / denom,
        mean_t_conv: results
            .iter()
            .map(|r| f64::from(r.converged_at.unwrap_or(t_max)))
            .sum::<f64>()
            / denom,
        converged_count: results.iter().filter(|r| r.converged_at.is_some()).count(),
        non_monotone_runs: results.iter().filter(|r| !r.cutset_monotone).count(),
    }
}

/// Runs every cell `runs_per_cell` times. Runs execute in parallel; rows
/// come back in grid order.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.runs_per_cell).map(move |r| (c, r)))
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(c, r)| run_single(spec, &cells[c], r))
        .collect::<Result<_>>()?;
    Ok(cells
        .iter()
        .zip(results.chunks(spec.runs_per_cell))
        .map(|(cell, chunk)| {
            let row = summarize(cell.population, chunk, spec.t_max);
            log::info!(
                "cell {}: sigma={} theta_R={} theta_F={} rigid={} rate={:.2}",
                cell.index,
                row.population.sigma_deg,
                row.population.theta_r_deg,
                row.population.theta_f_deg,
                row.population.rigid_fraction,
                row.consensus_rate
            );
            row
        })
        .collect())
}
