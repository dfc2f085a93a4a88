use opinet::cutset::cutset_timeline;
use opinet::io::{self, RunFiles, SweepRecord, Trajectory};
use opinet::plot::{count_clusters, emit_plots};
use opinet::{run_recorded, run_sweep, ExperimentSpec, RunConfig};

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        n: 30,
        sigma_deg: vec![25.0],
        theta_r_deg: vec![10.0],
        theta_f_deg: vec![40.0],
        rigid_fraction: vec![1.0],
        runs_per_cell: 1,
        t_max: 120,
        ..ExperimentSpec::default()
    }
}

#[test]
fn run_files_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec();
    let (_, state) = run_recorded(&spec, &spec.cells()[0], 0, 5).unwrap();
    let tl = cutset_timeline(state.history.iter().map(|s| (s.t, &s.graph)), &state.graph).unwrap();
    let files = io::emit_results(
        dir.path(),
        None,
        &[RunFiles {
            label: "0".into(),
            history: &state.history,
            cutsets: Some(&tl),
        }],
    )
    .unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(names, ["opinions_0.csv", "edges_0.csv", "cutset_0.csv"]);

    let traj = io::read_opinions(&files[0]).unwrap();
    assert_eq!(traj.times, state.history.iter().map(|s| s.t).collect::<Vec<_>>());
    let direct = Trajectory::from_history(&state.history);
    for (a, b) in traj.theta_deg.iter().flatten().zip(direct.theta_deg.iter().flatten()) {
        assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
    }

    let graphs = io::read_edges(&files[1]).unwrap();
    assert_eq!(graphs.len(), state.history.len());
    for ((t, g), s) in graphs.iter().zip(&state.history) {
        assert_eq!(*t, s.t);
        assert_eq!(g.edge_set(), s.graph.edge_set());
        for (u, v, w) in s.graph.edges() {
            assert!((g.weight(u, v).unwrap() - w).abs() <= 5e-6 * w);
        }
    }

    let cuts = io::read_cutset(&files[2]).unwrap();
    assert_eq!(cuts.len(), tl.reports.len());
    for (c, r) in cuts.iter().zip(&tl.reports) {
        assert_eq!(c.cut_edges, r.cut_edges);
    }
    // cut-sets recomputed from the stored edges agree with the originals
    let last = &graphs.last().unwrap().1;
    let tl2 = cutset_timeline(graphs.iter().map(|(t, g)| (*t, g)), last).unwrap();
    assert_eq!(tl2.reports.iter().map(|r| &r.cut_edges).collect::<Vec<_>>(),
               tl.reports.iter().map(|r| &r.cut_edges).collect::<Vec<_>>());
}

#[test]
fn one_cell_one_run_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&small_spec()).unwrap();
    let table: Vec<SweepRecord> = rows.iter().map(SweepRecord::from).collect();
    io::emit_results(dir.path(), Some(&table), &[]).unwrap();
    let back = io::read_sweep(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].runs, 1);
    assert_eq!(back[0].sigma_deg, 25.0);
}

#[test]
fn identical_inputs_identical_files() {
    let spec = ExperimentSpec {
        rigid_fraction: vec![0.0, 1.0],
        runs_per_cell: 2,
        ..small_spec()
    };
    let render = || {
        let dir = tempfile::tempdir().unwrap();
        let table: Vec<SweepRecord> = run_sweep(&spec).unwrap().iter().map(SweepRecord::from).collect();
        let (_, state) = run_recorded(&spec, &spec.cells()[1], 0, 1).unwrap();
        let runs = [RunFiles { label: "1_0".into(), history: &state.history, cutsets: None }];
        let mut files = io::emit_results(dir.path(), Some(&table), &runs).unwrap();
        let traj = [("1_0".to_string(), Trajectory::from_history(&state.history))];
        files.extend(emit_plots(dir.path(), Some(&table), &traj, &Default::default()).unwrap());
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        (files.iter().map(|f| f.file_name().unwrap().to_owned()).collect::<Vec<_>>(), bytes)
    };
    assert_eq!(render(), render());
}

#[test]
fn all_rigid_liberal_trajectory_splits() {
    let spec = ExperimentSpec {
        n: 100,
        t_max: 250,
        runs_per_cell: 1,
        ..small_spec()
    };
    let (_, state) = run_recorded(&spec, &spec.cells()[0], 0, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let traj = [("0".to_string(), Trajectory::from_history(&state.history))];
    let files = emit_plots(dir.path(), None, &traj, &Default::default()).unwrap();
    let read = io::Trajectory::from_history(&state.history);
    let clusters = count_clusters(read.theta_deg.last().unwrap(), 1.0);
    assert!(clusters >= 2, "{clusters} clusters");
    let svg = std::fs::read_to_string(&files[0]).unwrap();
    assert!(svg.contains(&format!("({clusters} terminal clusters)")));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.toml");
    std::fs::write(&p, RunConfig::default().to_toml_string()).unwrap();
    assert_eq!(RunConfig::load(&p).unwrap(), RunConfig::default());
    std::fs::write(&p, "").unwrap();
    assert_eq!(RunConfig::load(&p).unwrap(), RunConfig::default());
}
