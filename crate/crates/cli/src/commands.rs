//! The three subcommands. Each run renders its terminal output into a
//! [`Report`] so batch runs can print in a stable order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bpe_core::estimation::run_observer;
use bpe_core::pe::is_bpe;
use bpe_core::scenario::{Overrides, Scenario, ScenarioError};
use bpe_core::simulation::run_scenario;
use bpe_core::Error;
use nalgebra::DVector;
use rayon::prelude::*;

use crate::csv;
use crate::svg::{self, Series, PALETTE};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_ASSUMPTION: u8 = 3;
pub const EXIT_ABORTED: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Observe,
    Analyze,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub overrides: Overrides,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub stdout: String,
    pub stderr: String,
    pub status: u8,
}

impl Report {
    fn fail(mut self, status: u8, message: impl std::fmt::Display) -> Self {
        writeln!(self.stderr, "error: {message}").unwrap();
        self.status = self.status.max(status);
        self
    }
}

/// Exit status for a core error: assumption violations are 3, malformed
/// input is 2.
pub fn status_of(err: &Error) -> u8 {
    match err.root() {
        Error::DisconnectedGraph
        | Error::CoincidentAgents { .. }
        | Error::DegenerateDesired { .. }
        | Error::HorizonTooShort { .. }
        | Error::StepTooCoarse { .. }
        | Error::NonUnitVector { .. } => EXIT_ASSUMPTION,
        _ => EXIT_USAGE,
    }
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Base path for artifacts without extension: the CSV path from the file,
/// else the scenario name in the working directory.
fn artifact_stem(s: &Scenario) -> PathBuf {
    match &s.output.csv {
        Some(p) => p.with_extension(""),
        None => PathBuf::from(&s.name),
    }
}

fn suffixed(stem: &Path, suffix: &str, ext: &str) -> PathBuf {
    let mut name = stem.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    stem.with_file_name(name).with_extension(ext)
}

fn write_artifact(report: &mut Report, path: &Path, contents: &str) -> bool {
    match csv::write(path, contents) {
        Ok(()) => {
            writeln!(report.stdout, "wrote {}", path.display()).unwrap();
            true
        }
        Err(e) => {
            writeln!(report.stderr, "error: cannot write {}: {e}", path.display()).unwrap();
            report.status = report.status.max(EXIT_IO);
            false
        }
    }
}

/// Loads and runs one scenario file.
pub fn run_file(cmd: Command, path: &Path, opts: &Options) -> Report {
    let report = Report::default();
    let scenario = match Scenario::load(path, &opts.overrides) {
        Ok(s) => s,
        Err(e @ ScenarioError::Io { .. }) => return report.fail(EXIT_IO, e),
        Err(e) => return report.fail(EXIT_USAGE, e),
    };
    match cmd {
        Command::Simulate => simulate(&scenario, opts),
        Command::Observe => observe(&scenario, opts),
        Command::Analyze => analyze(&scenario, opts),
    }
}

pub fn simulate(s: &Scenario, opts: &Options) -> Report {
    let mut report = Report::default();
    let log = match run_scenario(s) {
        Ok(log) => log,
        Err(e) => {
            let status = status_of(&e);
            return report.fail(status, e);
        }
    };
    let out = &mut report.stdout;
    writeln!(out, "scenario: {}", s.name).unwrap();
    writeln!(
        out,
        "agents: {}, dimension: {}, edges: {}, k_p: {}",
        log.agent_count(),
        log.d,
        s.graph.edge_count(),
        s.params.k_p()
    )
    .unwrap();
    writeln!(out, "horizon: {} s, dt: {}", s.horizon, s.dt).unwrap();
    let last = log.times.len() - 1;
    writeln!(out, "final t: {}", log.times[last]).unwrap();
    writeln!(
        out,
        "‖p̃‖: {:.6e} -> {:.6e}",
        log.p_tilde_norm[0], log.p_tilde_norm[last]
    )
    .unwrap();
    writeln!(out, "‖δ‖: {:.6e} -> {:.6e}", log.delta_norm[0], log.delta_norm[last]).unwrap();
    let drift = log.centroid_drift.iter().copied().fold(0.0, f64::max);
    writeln!(out, "max centroid drift: {drift:.3e}").unwrap();

    let stem = artifact_stem(s);
    let csv_path = opts.csv.clone().unwrap_or_else(|| stem.with_extension("csv"));
    let svg_path = opts
        .svg
        .clone()
        .or_else(|| s.output.svg.clone())
        .unwrap_or_else(|| stem.with_extension("svg"));
    let trajectory_path = suffixed(&svg_path.with_extension(""), "_trajectory", "svg");
    write_artifact(&mut report, &csv_path, &csv::simulation_csv(&log, &s.graph));
    let chart = svg::line_chart(
        &format!("{}: error norms", s.name),
        "t [s]",
        "norm",
        &[
            Series::new("‖p̃‖", PALETTE[0], &log.times, &log.p_tilde_norm),
            Series::new("‖δ‖", PALETTE[1], &log.times, &log.delta_norm).dashed(),
        ],
    );
    write_artifact(&mut report, &svg_path, &chart);
    let traj = svg::trajectory_plot(&format!("{}: trajectories", s.name), &log, &s.graph);
    write_artifact(&mut report, &trajectory_path, &traj);

    if let Some(abort) = &log.aborted {
        writeln!(report.stderr, "error: run aborted at t = {}: {}", abort.t, abort.error).unwrap();
        report.status = report.status.max(EXIT_ABORTED);
    }
    report
}

pub fn observe(s: &Scenario, opts: &Options) -> Report {
    let mut report = Report::default();
    let log = match run_observer(&s.motion, &s.graph, &s.p_hat0, s.horizon, s.dt, s.separation_floor) {
        Ok(log) => log,
        Err(e) => {
            let status = status_of(&e);
            return report.fail(status, e);
        }
    };
    match is_bpe(&s.motion, &s.graph, &s.pe_settings()) {
        Ok(r) if !r.is_bpe => writeln!(
            report.stderr,
            "warning: the formation is not bearing persistently exciting (μ = {:.3e}); recovery is not guaranteed",
            r.witness.mu
        )
        .unwrap(),
        Ok(_) => {}
        Err(e) => writeln!(report.stderr, "warning: excitation could not be checked: {e}").unwrap(),
    }
    let out = &mut report.stdout;
    let last = log.times.len() - 1;
    let measured = log.final_offset();
    writeln!(out, "scenario: {}", s.name).unwrap();
    writeln!(out, "seed: {}, horizon: {} s, dt: {}", s.seed, s.horizon, s.dt).unwrap();
    writeln!(out, "‖ζ‖: {:.6e} -> {:.6e}", log.zeta_norm[0], log.zeta_norm[last]).unwrap();
    writeln!(
        out,
        "max ‖Uᵀζ‖: {:.3e}",
        log.zeta_centroid_norm.iter().copied().fold(0.0, f64::max)
    )
    .unwrap();
    writeln!(out, "final offset:       {}", fmt_vec(&measured)).unwrap();
    writeln!(out, "(1/n)Uᵀ(p̂(0)-p(0)): {}", fmt_vec(&log.offset)).unwrap();
    writeln!(out, "offset error: {:.3e}", (&measured - &log.offset).norm()).unwrap();

    let stem = artifact_stem(s);
    let csv_path = opts.csv.clone().unwrap_or_else(|| suffixed(&stem, "_observer", "csv"));
    let svg_path = opts.svg.clone().unwrap_or_else(|| suffixed(&stem, "_observer", "svg"));
    write_artifact(&mut report, &csv_path, &csv::observer_csv(&log));
    let chart = svg::line_chart(
        &format!("{}: observer error", s.name),
        "t [s]",
        "‖ζ‖",
        &[Series::new("‖ζ‖", PALETTE[0], &log.times, &log.zeta_norm)],
    );
    write_artifact(&mut report, &svg_path, &chart);

    if let Some(abort) = &log.aborted {
        writeln!(report.stderr, "error: run aborted at t = {}: {}", abort.t, abort.error).unwrap();
        report.status = report.status.max(EXIT_ABORTED);
    }
    report
}

fn verdict(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn rule(r: Option<bool>) -> &'static str {
    match r {
        None => "n/a",
        Some(true) => "holds",
        Some(false) => "VIOLATED",
    }
}

pub fn analyze(s: &Scenario, opts: &Options) -> Report {
    let mut report = Report::default();
    let settings = s.pe_settings();
    let r = match is_bpe(&s.motion, &s.graph, &settings) {
        Ok(r) => r,
        Err(e) => {
            let status = status_of(&e);
            return report.fail(status, e);
        }
    };
    let out = &mut report.stdout;
    writeln!(out, "scenario: {}", s.name).unwrap();
    writeln!(
        out,
        "window T: {} s, horizon: {} s, dt: {}",
        settings.window, settings.horizon, settings.dt
    )
    .unwrap();
    writeln!(
        out,
        "BPE: {} (μ = {:.6e}, floor {:e})",
        verdict(r.is_bpe),
        r.witness.mu,
        settings.mu_floor
    )
    .unwrap();
    writeln!(
        out,
        "Π PE: {} (μ = {:.6e})",
        verdict(r.projector_witness.verdict.is_pe()),
        r.projector_witness.mu
    )
    .unwrap();
    let min_rank = r.rank_trace.iter().copied().min().unwrap_or(0);
    let max_rank = r.rank_trace.iter().copied().max().unwrap_or(0);
    writeln!(
        out,
        "rank L_B: min {min_rank}, max {max_rank}, maximal {} ({})",
        r.maximal_rank,
        if r.rank_always_maximal() {
            "always maximal"
        } else {
            "not always maximal"
        }
    )
    .unwrap();
    match r.min_pe_bound {
        Some(b) => writeln!(out, "PE edges: {} (planar lower bound {b})", r.pe_edge_count()).unwrap(),
        None => writeln!(out, "PE edges: {}", r.pe_edge_count()).unwrap(),
    }
    writeln!(out, "edge    PE   μ").unwrap();
    for (&(i, j), w) in s.graph.edges().iter().zip(&r.per_edge) {
        writeln!(
            out,
            "{:<7} {:<4} {:.6e}",
            format!("{}-{}", i + 1, j + 1),
            verdict(w.verdict.is_pe()),
            w.mu
        )
        .unwrap();
    }
    writeln!(
        out,
        "structural rules: acyclic {}, rigid {}, counting {}",
        rule(r.structural.acyclic_rule),
        rule(r.structural.rigid_rule),
        rule(r.structural.counting_rule)
    )
    .unwrap();

    let stem = artifact_stem(s);
    let csv_path = opts.csv.clone().unwrap_or_else(|| suffixed(&stem, "_windows", "csv"));
    let svg_path = opts.svg.clone().unwrap_or_else(|| suffixed(&stem, "_windows", "svg"));
    write_artifact(&mut report, &csv_path, &csv::window_minima_csv(&r, &s.graph));
    let starts: Vec<f64> = r.witness.window_minima.iter().map(|w| w.0).collect();
    let rel: Vec<f64> = r.witness.window_minima.iter().map(|w| w.1).collect();
    let proj: Vec<f64> = r.projector_witness.window_minima.iter().map(|w| w.1).collect();
    let chart = svg::line_chart(
        &format!("{}: window minima (T = {} s)", s.name, settings.window),
        "window start [s]",
        "level",
        &[
            Series::new("L_B relative to L", PALETTE[0], &starts, &rel),
            Series::new("Π", PALETTE[1], &starts, &proj).dashed(),
        ],
    );
    write_artifact(&mut report, &svg_path, &chart);
    report
}

/// Scenario files (`*.toml`) in `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every scenario in `dir` in parallel. Reports come back in file order;
/// the status is the worst of all runs.
pub fn run_batch(cmd: Command, dir: &Path, opts: &Options) -> Report {
    if opts.csv.is_some() || opts.svg.is_some() {
        return Report::default().fail(EXIT_USAGE, "--csv and --svg cannot be combined with --batch");
    }
    let files = match scenario_files(dir) {
        Ok(f) if f.is_empty() => {
            return Report::default().fail(EXIT_USAGE, format!("no scenario files in {}", dir.display()))
        }
        Ok(f) => f,
        Err(e) => return Report::default().fail(EXIT_USAGE, format!("{}: {e}", dir.display())),
    };
    let reports: Vec<Report> = files.par_iter().map(|f| run_file(cmd, f, opts)).collect();
    let mut merged = Report::default();
    for (file, r) in files.iter().zip(reports) {
        writeln!(merged.stdout, "== {} (status {})", file.display(), r.status).unwrap();
        merged.stdout.push_str(&r.stdout);
        if !r.stderr.is_empty() {
            writeln!(merged.stderr, "== {}", file.display()).unwrap();
            merged.stderr.push_str(&r.stderr);
        }
        merged.status = merged.status.max(r.status);
    }
    merged
}
