//! Opinion dynamics on an adaptive directed trust network.
//!
//! Agents hold opinions in `[0, π]` and follow a weighted circular-mean rule
//! over their direct ties and a random subset of 2/3-hop contacts. Ties are
//! gained through repeated interaction and lost when opinions drift out of
//! tolerance. The crate also analyzes which ties separate the final factions
//! and runs seeded Monte Carlo sweeps over population recipes.

pub mod config;
pub mod cutset;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod opinion;
pub mod plot;

pub use config::RunConfig;
pub use cutset::{cutset_timeline, edge_cutset, CutsetReport, CutsetTimeline};
pub use engine::{EngineParams, InteractionLedger, Neighborhood, SimState, Snapshot, UpdateMode};
pub use error::{Error, Result};
pub use experiments::{
    derive_seed, run_recorded, run_single, run_sweep, setup_run, Cell, ExperimentSpec, PopulationSpec,
    RunResult, SweepRow,
};
pub use io::{SweepRecord, Trajectory};
pub use graph::{DynGraph, KatzParams, Partition};
pub use opinion::{AgentKind, AgentParams, OpinionState};
