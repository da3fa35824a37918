//! File formats written by the commands.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fluidgame_core::analysis::TheoremReport;
use fluidgame_core::model::{Termination, Trajectory};
use fluidgame_core::pontryagin::CaptureTime;
use fluidgame_core::stochastic::{DisturbanceStats, DisturbanceSummary};
use fluidgame_core::DefenderKind;
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;
pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "q1", "q2", "u1", "u2", "v", "alpha"];
pub const COMPARE_HEADER: [&str; 6] = ["t", "mean_q", "se_q", "fluid_q", "mean_n", "var_n"];

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(&row[..]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One row per sample: `t,q1,q2,u1,u2,v,alpha`.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<(), OutputError> {
    write_rows(
        path,
        TRAJECTORY_HEADER,
        traj.samples.iter().map(|s| {
            [
                s.state.t,
                s.state.q1,
                s.state.q2,
                s.u.u1,
                s.u.u2,
                s.v.v,
                s.arrival.alpha,
            ]
        }),
    )
}

/// One row per slot boundary: `t,mean_q,se_q,fluid_q,mean_n,var_n`.
pub fn write_compare_csv(path: &Path, stats: &DisturbanceStats) -> Result<(), OutputError> {
    write_rows(
        path,
        COMPARE_HEADER,
        (0..stats.len()).map(|i| {
            [
                stats.times[i],
                stats.mean_queue[i],
                stats.std_error[i],
                stats.fluid[i],
                stats.mean_disturbance[i],
                stats.var_disturbance[i],
            ]
        }),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport<'a> {
    pub format: &'static str,
    pub version: u32,
    pub scenario: &'a str,
    pub defender: DefenderKind,
    pub dt: f64,
    pub samples: usize,
    pub termination: Termination,
    pub theorem: TheoremReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport<'a> {
    pub format: &'static str,
    pub version: u32,
    pub scenario: &'a str,
    pub epsilon: f64,
    pub condition1: bool,
    pub condition2: bool,
    pub t2_star: Option<f64>,
    pub q1_peak_bound: Option<f64>,
    pub t1_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport<'a> {
    pub format: &'static str,
    pub version: u32,
    pub scenario: &'a str,
    pub n_dirs: usize,
    pub n_quad: usize,
    pub tol_t: f64,
    pub horizon: f64,
    pub capture: CaptureTime,
    pub t2_star: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport<'a> {
    pub format: &'static str,
    pub version: u32,
    pub scenario: &'a str,
    pub n_runs: usize,
    pub seed: u64,
    pub horizon_slots: usize,
    pub slot_dt: f64,
    pub effective_service_rate: f64,
    pub variance_rate: f64,
    pub summary: DisturbanceSummary,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const MAX_POINTS: usize = 2000;

/// Static line chart of `q1(t)` and `q2(t)` with the `q1_max` level.
pub fn render_svg(title: &str, traj: &Trajectory, q1_max: f64) -> String {
    let samples = &traj.samples;
    let t0 = samples.first().map_or(0.0, |s| s.state.t);
    let t1 = samples.last().map_or(1.0, |s| s.state.t);
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let y_top = samples
        .iter()
        .map(|s| s.state.q1.max(s.state.q2))
        .fold(q1_max, f64::max)
        .max(1e-9)
        * 1.05;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |t: f64| MARGIN_LEFT + (t - t0) / t_span * plot_w;
    let y = |q: f64| MARGIN_TOP + (1.0 - q / y_top) * plot_h;

    let stride = samples.len().div_ceil(MAX_POINTS).max(1);
    let mut picked: Vec<usize> = (0..samples.len()).step_by(stride).collect();
    if let Some(last) = samples.len().checked_sub(1) {
        if picked.last() != Some(&last) {
            picked.push(last);
        }
    }
    let polyline = |f: &dyn Fn(usize) -> f64| {
        picked
            .iter()
            .map(|&i| format!("{:.2},{:.2}", x(samples[i].state.t), y(f(i))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let q1_points = polyline(&|i| samples[i].state.q1);
    let q2_points = polyline(&|i| samples[i].state.q2);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // Axes and ticks.
    let (x_lo, x_hi) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y_lo, y_hi) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    svg.push_str(&format!(
        "<path d=\"M{x_lo},{y_hi} L{x_lo},{y_lo} L{x_hi},{y_lo}\" stroke=\"black\" fill=\"none\"/>\n"
    ));
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let tv = t0 + frac * t_span;
        let qv = frac * y_top;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            x(tv),
            y_lo + 16.0,
            tick(tv)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            x_lo - 6.0,
            y(qv) + 4.0,
            tick(qv)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">t</text>\n",
        (x_lo + x_hi) / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">queue level</text>\n",
        (y_lo + y_hi) / 2.0,
        (y_lo + y_hi) / 2.0
    ));
    svg.push_str(&format!(
        "<line x1=\"{x_lo}\" y1=\"{:.2}\" x2=\"{x_hi}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
        y(q1_max),
        y(q1_max)
    ));
    svg.push_str(&format!(
        "<polyline points=\"{q1_points}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<polyline points=\"{q2_points}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n"
    ));
    // Legend.
    let lx = x_hi - 110.0;
    for (row, (label, color)) in [("q1", "#1f77b4"), ("q2", "#d62728"), ("q1_max", "gray")]
        .into_iter()
        .enumerate()
    {
        let ly = MARGIN_TOP + 14.0 + 16.0 * row as f64;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 24.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{label}</text>\n",
            lx + 30.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
