use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use opinet::cutset::{cutset_timeline, is_unique_minimal};
use opinet::io::{self, RunFiles, SweepRecord, Trajectory};
use opinet::plot::emit_plots;
use opinet::{run_recorded, run_sweep, RunConfig};

/// Opinion dynamics on an adaptive trust network.
#[derive(Parser)]
#[command(name = "opinet", version)]
struct Cli {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overrides the config and OPINET_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run with full history: opinions, edges and cut-sets per snapshot.
    Simulate {
        /// Grid cell index (σ outermost, then θ_R, θ_F, rigid fraction).
        #[arg(long, default_value_t = 0)]
        cell: usize,
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
    /// Monte Carlo sweep over the configured grid.
    Sweep,
    /// Cut-set analysis of a stored edge-list file.
    Cutset {
        /// An `edges_<run>.csv` file.
        edges: PathBuf,
    },
    /// Re-render plots from stored CSV files.
    Plot {
        /// Sweep table; defaults to `sweep.csv` in the output directory.
        #[arg(long)]
        sweep: Option<PathBuf>,
        /// Opinion files; defaults to every `opinions_*.csv` in the output directory.
        #[arg(long, num_args = 1..)]
        opinions: Vec<PathBuf>,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env();
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match &cli.command {
        Command::Simulate { cell, run } => simulate(&cfg, *cell, *run, cli.quiet),
        Command::Sweep => sweep(&cfg, cli.quiet),
        Command::Cutset { edges } => cutset(&cfg, edges, cli.quiet),
        Command::Plot { sweep, opinions } => plot(&cfg, sweep.as_deref(), opinions),
    }
}

fn simulate(cfg: &RunConfig, cell: usize, run: usize, quiet: bool) -> Result<()> {
    let spec = cfg.experiment_spec();
    let cells = spec.cells();
    let Some(c) = cells.get(cell) else {
        bail!("cell {cell} out of range, the grid has {} cells", cells.len());
    };
    let (result, state) = run_recorded(&spec, c, run, cfg.snapshot_every)?;
    let timeline = cutset_timeline(state.history.iter().map(|s| (s.t, &s.graph)), &state.graph)?;
    let label = format!("{cell}_{run}");
    let files = io::emit_results(
        &cfg.out_dir,
        None,
        &[RunFiles {
            label: label.clone(),
            history: &state.history,
            cutsets: Some(&timeline),
        }],
    )?;
    let traj = [(label, Trajectory::from_history(&state.history))];
    emit_plots(&cfg.out_dir, None, &traj, &cfg.plots)?;
    if !quiet {
        let p = &c.population;
        println!(
            "sigma={} theta_R={} theta_F={} rigid_fraction={} seed={}",
            p.sigma_deg, p.theta_r_deg, p.theta_f_deg, p.rigid_fraction, result.seed
        );
        match result.converged_at {
            Some(t) => println!("converged at t={t}"),
            None => println!("not converged by t={}", spec.t_max),
        }
        println!(
            "components={} consensus={} range_deg={}",
            result.n_components,
            result.consensus,
            io::fmt_num(result.final_range.to_degrees())
        );
        for f in files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, quiet: bool) -> Result<()> {
    let spec = cfg.experiment_spec();
    log::info!(
        "{} cells x {} runs, seed {}",
        spec.cells().len(),
        spec.runs_per_cell,
        spec.base_seed
    );
    let rows = run_sweep(&spec)?;
    let table: Vec<SweepRecord> = rows.iter().map(SweepRecord::from).collect();
    let mut files = io::emit_results(&cfg.out_dir, Some(&table), &[])?;
    files.extend(emit_plots(&cfg.out_dir, Some(&table), &[], &cfg.plots)?);
    if !quiet {
        println!("sigma_deg theta_R_deg theta_F_deg rigid_fraction consensus_rate mean_components");
        for r in &table {
            println!(
                "{:>9} {:>11} {:>11} {:>14} {:>14} {:>15}",
                io::fmt_num(r.sigma_deg),
                io::fmt_num(r.theta_r_deg),
                io::fmt_num(r.theta_f_deg),
                io::fmt_num(r.rigid_fraction),
                io::fmt_num(r.consensus_rate),
                io::fmt_num(r.mean_components)
            );
        }
        for f in files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn run_label(path: &Path, prefix: &str) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.strip_prefix(prefix).unwrap_or(s).to_string())
        .unwrap_or_else(|| "0".into())
}

fn cutset(cfg: &RunConfig, edges: &Path, quiet: bool) -> Result<()> {
    let history = io::read_edges(edges)?;
    let Some((_, last)) = history.last() else {
        bail!("{}: no snapshots", edges.display());
    };
    let timeline = cutset_timeline(history.iter().map(|(t, g)| (*t, g)), last)?;
    std::fs::create_dir_all(&cfg.out_dir).with_context(|| cfg.out_dir.display().to_string())?;
    let path = cfg.out_dir.join(format!("cutset_{}.csv", run_label(edges, "edges_")));
    io::write_cutset(&path, &timeline)?;
    let minimal = timeline
        .reports
        .iter()
        .zip(&history)
        .all(|(r, (_, g))| is_unique_minimal(r, g));
    if !quiet {
        let first = &timeline.reports[0];
        println!("snapshots={} final_components={}", timeline.reports.len(), first.final_partition.len());
        println!("initial cut size={}", first.size());
        if let Some(k) = timeline.largest() {
            println!("largest cut size={} at t={}", timeline.reports[k].size(), timeline.reports[k].t);
        }
        println!("monotone={} final_empty={} unique_minimal={minimal}", timeline.monotone, timeline.final_empty);
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn plot(cfg: &RunConfig, sweep: Option<&Path>, opinions: &[PathBuf]) -> Result<()> {
    let default_sweep = cfg.out_dir.join("sweep.csv");
    let sweep_path = match sweep {
        Some(p) => Some(p.to_path_buf()),
        None => default_sweep.exists().then_some(default_sweep),
    };
    let table = sweep_path.as_deref().map(io::read_sweep).transpose()?;
    let opinion_paths: Vec<PathBuf> = if opinions.is_empty() {
        let mut found: Vec<PathBuf> = match std::fs::read_dir(&cfg.out_dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("opinions_") && n.ends_with(".csv"))
                })
                .collect(),
            Err(_) => Vec::new(),
        };
        found.sort();
        found
    } else {
        opinions.to_vec()
    };
    let trajectories = opinion_paths
        .iter()
        .map(|p| Ok((run_label(p, "opinions_"), io::read_opinions(p)?)))
        .collect::<Result<Vec<_>>>()?;
    if table.is_none() && trajectories.is_empty() {
        bail!("nothing to plot in {}", cfg.out_dir.display());
    }
    for f in emit_plots(&cfg.out_dir, table.as_deref(), &trajectories, &cfg.plots)? {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}
