//! Fixed-step integration, closed-loop runs and their logs.

use nalgebra::DVector;

use crate::control::{closed_loop_rhs, ControlParams, ErrorState};
use crate::error::{Error, Result};
use crate::geometry::{Configuration, EdgeGeometry};
use crate::graphs::OrientedGraph;
use crate::scenario::Scenario;
use crate::trajectories::Motion;

/// Default integration step in seconds.
pub const DEFAULT_DT: f64 = 0.01;

/// Sampled solution of an ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

/// An integration stopped by a right-hand-side error.
#[derive(Debug, Clone)]
pub struct Interrupted {
    /// Samples computed before the failing step.
    pub partial: Trajectory,
    pub error: Error,
}

/// Time grid `0, dt, 2dt, …` ending exactly at `horizon`; the final step is
/// shortened when `horizon` is not a multiple of `dt`.
pub fn time_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
    }
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    let steps = (horizon / dt - 1e-9).ceil().max(0.0) as usize;
    Ok((0..=steps).map(|k| (k as f64 * dt).min(horizon)).collect())
}

/// Classical fourth-order Runge–Kutta with a fixed step.
///
/// Errors from `rhs` carry the stage time at which they occurred.
pub fn integrate<F>(mut rhs: F, x0: DVector<f64>, horizon: f64, dt: f64) -> Result<Trajectory, Interrupted>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let grid = time_grid(horizon, dt).map_err(|error| Interrupted {
        partial: Trajectory {
            times: Vec::new(),
            states: Vec::new(),
        },
        error,
    })?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(grid.len()),
        states: Vec::with_capacity(grid.len()),
    };
    traj.times.push(grid[0]);
    traj.states.push(x0);
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let x = traj.states.last().expect("trajectory starts non-empty");
        let mut eval = |tt: f64, xx: &DVector<f64>| {
            rhs(tt, xx).map_err(|e| Error::AtTime {
                t: tt,
                source: Box::new(e),
            })
        };
        let step = (|| {
            let k1 = eval(t, x)?;
            let k2 = eval(t + h / 2.0, &(x + &k1 * (h / 2.0)))?;
            let k3 = eval(t + h / 2.0, &(x + &k2 * (h / 2.0)))?;
            let k4 = eval(t + h, &(x + &k3 * h))?;
            Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
        })();
        match step {
            Ok(next) => {
                traj.times.push(w[1]);
                traj.states.push(next);
            }
            Err(error) => return Err(Interrupted { partial: traj, error }),
        }
    }
    Ok(traj)
}

/// Why a run stopped before its horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub t: f64,
    pub error: Error,
}

/// Closed-loop run log.
#[derive(Debug, Clone)]
pub struct SimLog {
    pub d: usize,
    pub times: Vec<f64>,
    /// Agent positions `p(t)`.
    pub states: Vec<DVector<f64>>,
    /// Desired positions `p*(t)`.
    pub desired: Vec<DVector<f64>>,
    pub p_tilde_norm: Vec<f64>,
    pub delta_norm: Vec<f64>,
    /// `‖p̄(t) - p̄(0)‖`.
    pub centroid_drift: Vec<f64>,
    pub min_neighbor_distance: Vec<f64>,
    /// Bearings of the actual formation, per sample and edge.
    pub bearings: Vec<Vec<DVector<f64>>>,
    pub aborted: Option<Abort>,
}

impl SimLog {
    pub fn agent_count(&self) -> usize {
        self.states.first().map_or(0, |p| p.len() / self.d)
    }

    pub fn final_p_tilde_norm(&self) -> f64 {
        self.p_tilde_norm.last().copied().unwrap_or(f64::NAN)
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s >= t - 1e-9)
    }
}

/// Runs the bearing-only controller from `p0` along `motion`.
///
/// A collision or occlusion during the run does not return an error: the
/// partial log is kept and [`SimLog::aborted`] is set.
pub fn run_closed_loop(
    motion: &dyn Motion,
    graph: &OrientedGraph,
    p0: &DVector<f64>,
    params: &ControlParams,
    horizon: f64,
    dt: f64,
    floor: f64,
) -> Result<SimLog> {
    let d = motion.dim();
    if !graph.has_spanning_tree() {
        return Err(Error::DisconnectedGraph);
    }
    if motion.agent_count() != graph.vertex_count() || p0.len() != d * graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: d * graph.vertex_count(),
            got: p0.len(),
        });
    }
    // Assumption check at t = 0.
    EdgeGeometry::new(&Configuration::new(d, p0.clone())?, graph, floor)?;
    motion.state(0.0)?;

    let (traj, aborted) = match integrate(
        |t, p| closed_loop_rhs(p, t, motion, graph, params, floor),
        p0.clone(),
        horizon,
        dt,
    ) {
        Ok(traj) => (traj, None),
        Err(Interrupted { partial, error }) => {
            let t = match &error {
                Error::AtTime { t, .. } => *t,
                _ => partial.times.last().copied().unwrap_or(0.0),
            };
            (partial, Some(Abort { t, error }))
        }
    };

    let p_star0 = motion.state(0.0)?.p;
    let tilde0 = &p0.clone() - &p_star0;
    let mut log = SimLog {
        d,
        times: Vec::with_capacity(traj.times.len()),
        states: Vec::with_capacity(traj.times.len()),
        desired: Vec::with_capacity(traj.times.len()),
        p_tilde_norm: Vec::new(),
        delta_norm: Vec::new(),
        centroid_drift: Vec::new(),
        min_neighbor_distance: Vec::new(),
        bearings: Vec::new(),
        aborted,
    };
    for (t, p) in traj.times.into_iter().zip(traj.states) {
        let p_star = motion.state(t)?.p;
        let err = ErrorState::new(&p, &p_star, &tilde0, d);
        let cfg = Configuration::new(d, p.clone())?;
        log.min_neighbor_distance.push(cfg.min_neighbor_distance(graph));
        let bearings = graph
            .edges()
            .iter()
            .map(|&(i, j)| {
                let rel = cfg.point(j) - cfg.point(i);
                let len = rel.norm();
                rel / len
            })
            .collect();
        log.bearings.push(bearings);
        log.p_tilde_norm.push(err.p_tilde.norm());
        log.delta_norm.push(err.delta.norm());
        log.centroid_drift.push(err.centroid_drift().norm());
        log.times.push(t);
        log.states.push(p);
        log.desired.push(p_star);
    }
    Ok(log)
}

/// Runs the closed loop described by a scenario.
pub fn run_scenario(s: &Scenario) -> Result<SimLog> {
    run_closed_loop(
        &s.motion,
        &s.graph,
        &s.p0,
        &s.params,
        s.horizon,
        s.dt,
        s.separation_floor,
    )
}

/// Least-squares fit of `ln y = intercept + slope·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits a log-linear model to the positive samples of `values`.
pub fn fit_exponential_decay(times: &[f64], values: &[f64]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let r_squared = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Some(DecayFit {
        slope,
        intercept,
        r_squared,
    })
}
