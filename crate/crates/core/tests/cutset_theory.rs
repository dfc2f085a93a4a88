mod support;

use opinet::cutset::{cutset_timeline, is_unique_minimal};
use opinet::{run_recorded, ExperimentSpec};
use support::{crossing_edges, weak_labels};

fn fragmenting_spec() -> ExperimentSpec {
    ExperimentSpec {
        n: 60,
        sigma_deg: vec![25.0],
        theta_r_deg: vec![10.0],
        theta_f_deg: vec![40.0],
        rigid_fraction: vec![1.0],
        runs_per_cell: 12,
        base_seed: 3,
        ..ExperimentSpec::default()
    }
}

#[test]
fn cutsets_of_fragmenting_runs() {
    let spec = fragmenting_spec();
    let cell = spec.cells()[0];
    let mut fragmenting = 0;
    for run in 0..spec.runs_per_cell {
        let (result, state) = run_recorded(&spec, &cell, run, 1).unwrap();
        if result.n_components < 2 {
            continue;
        }
        fragmenting += 1;
        let labels = weak_labels(&state.graph);
        let tl = cutset_timeline(state.history.iter().map(|s| (s.t, &s.graph)), &state.graph).unwrap();
        assert_eq!(tl.reports.len(), state.history.len());
        let first = &tl.reports[0].cut_edges;
        for (rep, snap) in tl.reports.iter().zip(&state.history) {
            assert_eq!(rep.cut_edges, crossing_edges(&snap.graph, &labels), "seed {}", result.seed);
            assert!(is_unique_minimal(rep, &snap.graph), "seed {} t={}", result.seed, rep.t);
            assert!(rep.cut_edges.is_subset(first), "seed {} t={}", result.seed, rep.t);
            assert!(rep.size() <= first.len());
        }
        assert!(tl.final_empty);
        assert_eq!(tl.monotone, result.cutset_monotone, "seed {}", result.seed);
    }
    assert!(fragmenting >= 5, "only {fragmenting} fragmenting runs");
}

#[test]
fn consensus_run_has_empty_cutsets() {
    let spec = ExperimentSpec {
        rigid_fraction: vec![0.0],
        runs_per_cell: 1,
        ..fragmenting_spec()
    };
    let (result, state) = run_recorded(&spec, &spec.cells()[0], 0, 10).unwrap();
    assert_eq!(result.n_components, 1);
    let tl = cutset_timeline(state.history.iter().map(|s| (s.t, &s.graph)), &state.graph).unwrap();
    assert!(tl.reports.iter().all(|r| r.cut_edges.is_empty()));
    assert_eq!(state.history.first().unwrap().t, 0);
    assert_eq!(state.history.last().unwrap().t, state.t());
}
