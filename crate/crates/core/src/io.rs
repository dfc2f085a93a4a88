//! CSV result files.
//!
//! Every file starts with a `# format_version=1` comment line followed by a
//! header row. Reals are written with 6 significant digits, angles in
//! degrees. Rows are ordered by time, then by vertex indices.
//!
//! | file | columns |
//! |------|---------|
//! | `sweep.csv` | `sigma_deg,theta_R_deg,theta_F_deg,rigid_fraction,runs,consensus_rate,mean_components,mean_t_conv` |
//! | `opinions_<run>.csv` | `t,agent,theta_deg` |
//! | `edges_<run>.csv` | `t,from,to,weight`; rows with `from == to` carry the self-weight |
//! | `cutset_<run>.csv` | `t,from,to,cut_size,monotone` |
//!
//! In the cut-set file each snapshot contributes one row per cut edge (the
//! last two columns empty) followed by a summary row with `from` and `to`
//! empty, the cut-set size, and `1` if the cut-set is a subset of the
//! previous snapshot's.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cutset::CutsetTimeline;
use crate::engine::Snapshot;
use crate::error::{Error, Result};
use crate::experiments::SweepRow;
use crate::graph::{DynGraph, Edge};
use crate::opinion::rad_to_deg;

pub const FORMAT_VERSION: u32 = 1;
const VERSION_LINE: &str = "# format_version=1";

pub const SWEEP_HEADER: [&str; 8] = [
    "sigma_deg",
    "theta_R_deg",
    "theta_F_deg",
    "rigid_fraction",
    "runs",
    "consensus_rate",
    "mean_components",
    "mean_t_conv",
];
pub const OPINIONS_HEADER: [&str; 3] = ["t", "agent", "theta_deg"];
pub const EDGES_HEADER: [&str; 4] = ["t", "from", "to", "weight"];
pub const CUTSET_HEADER: [&str; 5] = ["t", "from", "to", "cut_size", "monotone"];

/// Formats a real with 6 significant digits, like C's `%g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{VERSION_LINE}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    Ok(w)
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error().into()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn open<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    if first.trim() != VERSION_LINE {
        return Err(Error::Format {
            path: path.into(),
            message: format!("expected `{VERSION_LINE}` as first line, found `{first}`"),
        });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let found = rdr.headers().map_err(|e| Error::csv(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Format {
            path: path.into(),
            message: format!("header `{}`, expected `{}`", found.iter().collect::<Vec<_>>().join(","), header.join(",")),
        });
    }
    rdr.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::csv(path, e))
}

fn bad(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.into(),
        message: message.into(),
    }
}

/// One line of `sweep.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct SweepRecord {
    pub sigma_deg: f64,
    #[serde(rename = "theta_R_deg")]
    pub theta_r_deg: f64,
    #[serde(rename = "theta_F_deg")]
    pub theta_f_deg: f64,
    pub rigid_fraction: f64,
    pub runs: usize,
    pub consensus_rate: f64,
    pub mean_components: f64,
    pub mean_t_conv: f64,
}

impl From<&SweepRow> for SweepRecord {
    fn from(r: &SweepRow) -> Self {
        Self {
            sigma_deg: r.population.sigma_deg,
            theta_r_deg: r.population.theta_r_deg,
            theta_f_deg: r.population.theta_f_deg,
            rigid_fraction: r.population.rigid_fraction,
            runs: r.runs,
            consensus_rate: r.consensus_rate,
            mean_components: r.mean_components,
            mean_t_conv: r.mean_t_conv,
        }
    }
}

pub fn write_sweep(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut w = create(path, &SWEEP_HEADER)?;
    for r in records {
        w.write_record([
            fmt_num(r.sigma_deg),
            fmt_num(r.theta_r_deg),
            fmt_num(r.theta_f_deg),
            fmt_num(r.rigid_fraction),
            r.runs.to_string(),
            fmt_num(r.consensus_rate),
            fmt_num(r.mean_components),
            fmt_num(r.mean_t_conv),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    finish(path, w)
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRecord>> {
    open(path, &SWEEP_HEADER)
}

/// Opinions of every agent at a sequence of times, in degrees.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<u32>,
    /// `theta_deg[k][i]` is agent `i` at `times[k]`.
    pub theta_deg: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn from_history(history: &[Snapshot]) -> Self {
        Self {
            times: history.iter().map(|s| s.t).collect(),
            theta_deg: history
                .iter()
                .map(|s| s.theta.iter().map(|&x| rad_to_deg(x)).collect())
                .collect(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.theta_deg.first().map_or(0, Vec::len)
    }
}

pub fn write_opinions(path: &Path, history: &[Snapshot]) -> Result<()> {
    let mut w = create(path, &OPINIONS_HEADER)?;
    for s in history {
        for (i, &x) in s.theta.iter().enumerate() {
            w.write_record([s.t.to_string(), i.to_string(), fmt_num(rad_to_deg(x))])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    finish(path, w)
}

#[derive(Deserialize)]
struct OpinionRow {
    t: u32,
    agent: usize,
    theta_deg: f64,
}

pub fn read_opinions(path: &Path) -> Result<Trajectory> {
    let rows: Vec<OpinionRow> = open(path, &OPINIONS_HEADER)?;
    let mut traj = Trajectory::default();
    for r in rows {
        if traj.times.last() != Some(&r.t) {
            if traj.times.last().is_some_and(|&t| r.t < t) {
                return Err(bad(path, format!("time {} out of order", r.t)));
            }
            traj.times.push(r.t);
            traj.theta_deg.push(Vec::new());
        }
        let frame = traj.theta_deg.last_mut().expect("frame pushed");
        if r.agent != frame.len() {
            return Err(bad(path, format!("t={}: agent {} out of order", r.t, r.agent)));
        }
        frame.push(r.theta_deg);
    }
    if traj.theta_deg.iter().any(|f| f.len() != traj.n_agents()) {
        return Err(bad(path, "frames have different agent counts"));
    }
    Ok(traj)
}

pub fn write_edges(path: &Path, history: &[Snapshot]) -> Result<()> {
    let mut w = create(path, &EDGES_HEADER)?;
    for s in history {
        let t = s.t.to_string();
        let g = &s.graph;
        let mut rows: Vec<(usize, usize, f64)> = g.edges();
        rows.extend((0..g.n()).map(|i| (i, i, g.self_weight(i))));
        rows.sort_by_key(|&(a, b, _)| (a, b));
        for (from, to, weight) in rows {
            w.write_record([t.clone(), from.to_string(), to.to_string(), fmt_num(weight)])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    finish(path, w)
}

#[derive(Deserialize)]
struct EdgeRow {
    t: u32,
    from: usize,
    to: usize,
    weight: f64,
}

/// Graph snapshots in file order. The vertex count is taken from the
/// self-weight rows, which every snapshot has one of per vertex.
pub fn read_edges(path: &Path) -> Result<Vec<(u32, DynGraph)>> {
    let rows: Vec<EdgeRow> = open(path, &EDGES_HEADER)?;
    let mut out = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let t = rows[start].t;
        let end = start + rows[start..].iter().take_while(|r| r.t == t).count();
        let chunk = &rows[start..end];
        let self_rows: Vec<&EdgeRow> = chunk.iter().filter(|r| r.from == r.to).collect();
        let n = self_rows.len();
        if self_rows.iter().enumerate().any(|(k, r)| r.from != k) {
            return Err(bad(path, format!("t={t}: self-weight rows must cover vertices 0..n")));
        }
        let mut g = DynGraph::new(n);
        g.set_self_weights(self_rows.iter().map(|r| r.weight).collect())
            .map_err(|e| bad(path, format!("t={t}: {e}")))?;
        for r in chunk.iter().filter(|r| r.from != r.to) {
            g.set_edge(r.from, r.to, r.weight)
                .map_err(|e| bad(path, format!("t={t}: {e}")))?;
        }
        if out.last().is_some_and(|&(prev, _)| prev >= t) {
            return Err(bad(path, format!("time {t} out of order")));
        }
        out.push((t, g));
        start = end;
    }
    Ok(out)
}

pub fn write_cutset(path: &Path, timeline: &CutsetTimeline) -> Result<()> {
    let mut w = create(path, &CUTSET_HEADER)?;
    for (report, &mono) in timeline.reports.iter().zip(&timeline.stepwise_monotone) {
        let t = report.t.to_string();
        for &(u, v) in &report.cut_edges {
            w.write_record([t.as_str(), &u.to_string(), &v.to_string(), "", ""])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.write_record([t.as_str(), "", "", &report.size().to_string(), if mono { "1" } else { "0" }])
            .map_err(|e| Error::csv(path, e))?;
    }
    finish(path, w)
}

/// One snapshot of a cut-set file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutsetRecord {
    pub t: u32,
    pub cut_edges: BTreeSet<Edge>,
    pub monotone: bool,
}

#[derive(Deserialize)]
struct CutsetRow {
    t: u32,
    from: Option<usize>,
    to: Option<usize>,
    cut_size: Option<usize>,
    monotone: Option<u8>,
}

pub fn read_cutset(path: &Path) -> Result<Vec<CutsetRecord>> {
    let rows: Vec<CutsetRow> = open(path, &CUTSET_HEADER)?;
    let mut out = Vec::new();
    let mut edges = BTreeSet::new();
    let mut pending: Option<u32> = None;
    for r in rows {
        if pending.is_some_and(|t| t != r.t) {
            return Err(bad(path, format!("t={}: missing summary row", r.t)));
        }
        match (r.from, r.to, r.cut_size, r.monotone) {
            (Some(u), Some(v), None, None) => {
                edges.insert((u, v));
                pending = Some(r.t);
            }
            (None, None, Some(size), Some(flag @ (0 | 1))) => {
                if size != edges.len() {
                    return Err(bad(path, format!("t={}: cut_size {size} but {} edges", r.t, edges.len())));
                }
                out.push(CutsetRecord {
                    t: r.t,
                    cut_edges: std::mem::take(&mut edges),
                    monotone: flag == 1,
                });
                pending = None;
            }
            _ => return Err(bad(path, format!("t={}: row is neither an edge nor a summary", r.t))),
        }
    }
    if pending.is_some() {
        return Err(bad(path, "trailing edges without summary row"));
    }
    Ok(out)
}

/// Per-run files of a single simulation.
pub struct RunFiles<'a> {
    pub label: String,
    pub history: &'a [Snapshot],
    pub cutsets: Option<&'a CutsetTimeline>,
}

/// Writes `sweep.csv` (when `table` is given) and the opinion, edge and
/// cut-set files of each run into `dir`, creating it if needed. Returns the
/// paths written, in order.
pub fn emit_results(dir: &Path, table: Option<&[SweepRecord]>, runs: &[RunFiles<'_>]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(table) = table {
        let p = dir.join("sweep.csv");
        write_sweep(&p, table)?;
        written.push(p);
    }
    for run in runs {
        let p = dir.join(format!("opinions_{}.csv", run.label));
        write_opinions(&p, run.history)?;
        written.push(p);
        let p = dir.join(format!("edges_{}.csv", run.label));
        write_edges(&p, run.history)?;
        written.push(p);
        if let Some(tl) = run.cutsets {
            let p = dir.join(format!("cutset_{}.csv", run.label));
            write_cutset(&p, tl)?;
            written.push(p);
        }
    }
    Ok(written)
}
