//! Fixtures shared by the benchmarks.

use opinet::{ExperimentSpec, SimState};

/// The first run of the cell with spread `sigma_deg`, θ_R = 10°, θ_F = 40°
/// and the given rigid fraction, advanced by `steps` time units.
pub fn fixture(sigma_deg: f64, rigid_fraction: f64, steps: u32) -> SimState {
    let spec = ExperimentSpec {
        sigma_deg: vec![sigma_deg],
        theta_r_deg: vec![10.0],
        theta_f_deg: vec![40.0],
        rigid_fraction: vec![rigid_fraction],
        runs_per_cell: 1,
        ..ExperimentSpec::default()
    };
    let cell = spec.cells()[0];
    let seed = opinet::derive_seed(spec.base_seed, cell.index, 0);
    let mut state = opinet::setup_run(&spec, &cell.population, seed).expect("valid fixture");
    for _ in 0..steps {
        state.step().expect("step");
    }
    state
}
