//! Static SVG figures.
//!
//! Output is plain text built from fixed-precision coordinates, so identical
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::PlotConfig;
use crate::error::{Error, Result};
use crate::io::{SweepRecord, Trajectory};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const PANEL_W: f64 = 280.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 50.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 44.0;

/// Number of groups in `values` when sorted values further apart than `gap`
/// start a new group.
pub fn count_clusters(values: &[f64], gap: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return 0;
    }
    1 + v.windows(2).filter(|w| w[1] - w[0] > gap).count()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open_svg(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Axis frame; tick positions are in pixels.
#[allow(clippy::too_many_arguments)]
fn axes(
    out: &mut String,
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xticks: &[(f64, String)],
    yticks: &[(f64, String)],
    xlabel: &str,
    ylabel: &str,
) {
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#
    );
    for (px, label) in xticks {
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + h,
            y0 + h + 4.0,
            y0 + h + 16.0,
            escape(label)
        );
    }
    for (py, label) in yticks {
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            py + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        x0 + w / 2.0,
        y0 + h + 32.0,
        escape(xlabel)
    );
    let (lx, ly) = (x0 - 36.0, y0 + h / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(ylabel)
    );
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Consensus rate against rigid fraction: one panel per σ, one line per
/// (θ_R, θ_F) pair.
pub fn sweep_svg(records: &[SweepRecord]) -> String {
    let sigmas = distinct(records.iter().map(|r| r.sigma_deg));
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for r in records {
        if !pairs.contains(&(r.theta_r_deg, r.theta_f_deg)) {
            pairs.push((r.theta_r_deg, r.theta_f_deg));
        }
    }
    let panels = sigmas.len().max(1) as f64;
    let legend_h = 18.0 * pairs.len() as f64 + 8.0;
    let width = panels * (PANEL_W + MARGIN_L) + 20.0;
    let height = MARGIN_T + PANEL_H + MARGIN_B + legend_h;
    let mut out = String::new();
    open_svg(&mut out, width, height);

    let ticks = |lo: f64, span: f64, flip: bool| -> Vec<(f64, String)> {
        (0..=5)
            .map(|k| {
                let v = f64::from(k) / 5.0;
                let px = if flip { lo + span * (1.0 - v) } else { lo + span * v };
                (px, format!("{v:.1}"))
            })
            .collect()
    };
    for (p, &sigma) in sigmas.iter().enumerate() {
        let x0 = MARGIN_L + p as f64 * (PANEL_W + MARGIN_L);
        let y0 = MARGIN_T;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">σ = {sigma}°</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 12.0
        );
        axes(
            &mut out,
            x0,
            y0,
            PANEL_W,
            PANEL_H,
            &ticks(x0, PANEL_W, false),
            &ticks(y0, PANEL_H, true),
            "rigid fraction",
            "consensus rate",
        );
        for (c, &(tr, tf)) in pairs.iter().enumerate() {
            let mut pts: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.sigma_deg == sigma && r.theta_r_deg == tr && r.theta_f_deg == tf)
                .map(|r| (r.rigid_fraction, r.consensus_rate))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let color = PALETTE[c % PALETTE.len()];
            let px: Vec<(f64, f64)> = pts
                .iter()
                .map(|&(x, y)| (x0 + x.clamp(0.0, 1.0) * PANEL_W, y0 + (1.0 - y.clamp(0.0, 1.0)) * PANEL_H))
                .collect();
            if px.len() > 1 {
                let path: Vec<String> = px.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
            for (x, y) in px {
                let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
            }
        }
    }
    let ly = MARGIN_T + PANEL_H + MARGIN_B + 10.0;
    for (c, &(tr, tf)) in pairs.iter().enumerate() {
        let y = ly + 18.0 * c as f64;
        let color = PALETTE[c % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{MARGIN_L:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">θR = {tr}°, θF = {tf}°</text>"#,
            MARGIN_L + 24.0,
            MARGIN_L + 30.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Opinion of every agent against time, with the number of terminal
/// opinion clusters (groups more than 1° apart) in the title.
pub fn trajectory_svg(traj: &Trajectory, title: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (x0, y0) = (60.0, 40.0);
    let (pw, ph) = (w - x0 - 20.0, h - y0 - 50.0);
    let t_lo = traj.times.first().copied().unwrap_or(0);
    let t_hi = traj.times.last().copied().unwrap_or(0).max(t_lo + 1);
    let span = f64::from(t_hi - t_lo);
    let xpx = |t: u32| x0 + f64::from(t - t_lo) / span * pw;
    let ypx = |deg: f64| y0 + (1.0 - deg.clamp(0.0, 180.0) / 180.0) * ph;

    let mut out = String::new();
    open_svg(&mut out, w, h);
    let clusters = traj.theta_deg.last().map_or(0, |f| count_clusters(f, 1.0));
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="13">{} ({clusters} terminal clusters)</text>"#,
        x0 + pw / 2.0,
        escape(title)
    );
    let step = (span / 5.0).ceil().max(1.0) as u32;
    let xticks: Vec<(f64, String)> = (0..)
        .map(|k| t_lo + k * step)
        .take_while(|&t| t <= t_hi)
        .map(|t| (xpx(t), t.to_string()))
        .collect();
    let yticks: Vec<(f64, String)> = (0..=6).map(|k| f64::from(k) * 30.0).map(|d| (ypx(d), format!("{d:.0}"))).collect();
    axes(&mut out, x0, y0, pw, ph, &xticks, &yticks, "t", "opinion (deg)");

    let n = traj.n_agents();
    let initial = traj.theta_deg.first();
    for i in 0..n {
        let color = ramp(initial.map_or(0.0, |f| f[i] / 180.0));
        let pts: Vec<String> = traj
            .times
            .iter()
            .zip(&traj.theta_deg)
            .map(|(&t, f)| format!("{:.2},{:.2}", xpx(t), ypx(f[i])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-opacity="0.6" stroke-width="0.8"/>"#,
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Blue to red as `v` goes from 0 to 1.
fn ramp(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0x1f, 0xd6), mix(0x77, 0x27), mix(0xb4, 0x28))
}

fn write(path: PathBuf, body: &str) -> Result<PathBuf> {
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `consensus_rate.svg` and one `trajectory_<label>.svg` per
/// trajectory into `dir`, as enabled by `toggles`.
pub fn emit_plots(
    dir: &Path,
    table: Option<&[SweepRecord]>,
    trajectories: &[(String, Trajectory)],
    toggles: &PlotConfig,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(table) = table {
        if toggles.sweep {
            written.push(write(dir.join("consensus_rate.svg"), &sweep_svg(table))?);
        } else {
            log::warn!("sweep plot disabled, skipping");
        }
    }
    if !trajectories.is_empty() {
        if toggles.trajectories {
            for (label, traj) in trajectories {
                let body = trajectory_svg(traj, &format!("run {label}"));
                written.push(write(dir.join(format!("trajectory_{label}.svg")), &body)?);
            }
        } else {
            log::warn!("trajectory plots disabled, skipping");
        }
    }
    Ok(written)
}
