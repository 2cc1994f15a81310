//! CSV logs. Floats use Rust's shortest round-trip formatting, so parsing a
//! written file gives back the exact in-memory values.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use bpe_core::estimation::ObserverLog;
use bpe_core::graphs::OrientedGraph;
use bpe_core::pe::BpeReport;
use bpe_core::simulation::SimLog;
use nalgebra::DVector;

const AXES: [&str; 3] = ["x", "y", "z"];

fn axis(c: usize, d: usize) -> String {
    if d <= 3 {
        AXES[c].to_string()
    } else {
        (c + 1).to_string()
    }
}

fn position_headers(prefix: &str, n: usize, d: usize) -> Vec<String> {
    (0..n)
        .flat_map(|i| (0..d).map(move |c| format!("{prefix}{}_{}", i + 1, axis(c, d))))
        .collect()
}

fn bearing_headers(graph: &OrientedGraph, d: usize) -> Vec<String> {
    let mut out = Vec::new();
    for &(i, j) in graph.edges() {
        let name = format!("g{}_{}", i + 1, j + 1);
        match d {
            2 => out.push(format!("{name}_angle")),
            3 => {
                out.push(format!("{name}_azimuth"));
                out.push(format!("{name}_elevation"));
            }
            _ => out.extend((0..d).map(|c| format!("{name}_{}", c + 1))),
        }
    }
    out
}

/// Angle for planar bearings, azimuth and elevation in 3-D, raw components
/// otherwise.
pub fn bearing_columns(g: &DVector<f64>) -> Vec<f64> {
    match g.len() {
        2 => vec![g[1].atan2(g[0])],
        3 => vec![g[1].atan2(g[0]), g[2].clamp(-1.0, 1.0).asin()],
        _ => g.iter().copied().collect(),
    }
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

pub fn simulation_csv(log: &SimLog, graph: &OrientedGraph) -> String {
    let n = log.agent_count();
    let d = log.d;
    let mut header = vec!["t".to_string()];
    header.extend(position_headers("p", n, d));
    header.extend(position_headers("pstar", n, d));
    header.extend(["p_tilde_norm", "delta_norm", "centroid_drift", "min_neighbor_distance"].map(String::from));
    header.extend(bearing_headers(graph, d));
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..log.times.len() {
        let mut row = vec![log.times[k]];
        row.extend(log.states[k].iter());
        row.extend(log.desired[k].iter());
        row.extend([
            log.p_tilde_norm[k],
            log.delta_norm[k],
            log.centroid_drift[k],
            log.min_neighbor_distance[k],
        ]);
        for g in &log.bearings[k] {
            row.extend(bearing_columns(g));
        }
        push_row(&mut out, row);
    }
    out
}

pub fn observer_csv(log: &ObserverLog) -> String {
    let d = log.d;
    let n = log.estimates.first().map_or(0, |e| e.len() / d);
    let mut header = vec!["t".to_string()];
    header.extend(position_headers("p_hat", n, d));
    header.extend(position_headers("p", n, d));
    header.extend(["zeta_norm", "zeta_centroid_norm"].map(String::from));
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..log.times.len() {
        let mut row = vec![log.times[k]];
        row.extend(log.estimates[k].iter());
        row.extend(log.truth[k].iter());
        row.extend([log.zeta_norm[k], log.zeta_centroid_norm[k]]);
        push_row(&mut out, row);
    }
    out
}

/// Per-window minima of the relative test, of `Π`, and of every edge.
pub fn window_minima_csv(report: &BpeReport, graph: &OrientedGraph) -> String {
    let mut header = vec![
        "window_start".to_string(),
        "relative".to_string(),
        "projector".to_string(),
    ];
    header.extend(graph.edges().iter().map(|&(i, j)| format!("edge_{}_{}", i + 1, j + 1)));
    let mut out = header.join(",");
    out.push('\n');
    for (w, &(start, level)) in report.witness.window_minima.iter().enumerate() {
        let mut row = vec![start, level, report.projector_witness.window_minima[w].1];
        row.extend(report.per_edge.iter().map(|e| e.window_minima[w].1));
        push_row(&mut out, row);
    }
    out
}

pub fn write(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}
