//! Distributed bearing-only formation control.
//!
//! Each agent applies
//!
//! ```text
//! v_i = -k_p Σ_{j ∈ N_i} π_{g_ij} p*_ij + v*_i
//! ```
//!
//! using only its measured bearings `g_ij`, the desired relative positions
//! `p*_ij` and its own desired velocity. Stacked over all agents this is
//! `ṗ = v* - k_p L_B(p) (p - p*)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{agent_bearing, Configuration};
use crate::graphs::OrientedGraph;
use crate::linalg;
use crate::simulation::SimLog;
use crate::trajectories::Motion;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    k_p: f64,
}

impl ControlParams {
    pub fn new(k_p: f64) -> Result<Self> {
        if !(k_p > 0.0 && k_p.is_finite()) {
            return Err(Error::InvalidParameter(format!("k_p must be positive, got {k_p}")));
        }
        Ok(Self { k_p })
    }

    /// `k_p = 0`: agents only follow the desired velocity.
    pub fn feedforward_only() -> Self {
        Self { k_p: 0.0 }
    }

    pub fn k_p(&self) -> f64 {
        self.k_p
    }
}

/// What agent `i` knows about one neighbor `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborData {
    /// Measured bearing `g_ij`.
    pub bearing: DVector<f64>,
    /// Desired relative position `p*_ij = p*_j - p*_i`.
    pub desired_relative: DVector<f64>,
}

/// Velocity command of a single agent from its neighborhood data alone.
pub fn agent_control(neighbors: &[NeighborData], v_star: &DVector<f64>, params: &ControlParams) -> DVector<f64> {
    let mut correction = DVector::zeros(v_star.len());
    for nb in neighbors {
        // π_g p* = p* - g (gᵀ p*)
        let along = nb.bearing.dot(&nb.desired_relative);
        correction += &nb.desired_relative - &nb.bearing * along;
    }
    v_star - correction * params.k_p
}

/// Stacked closed-loop velocity `ṗ` at time `t`, computed agent by agent.
pub fn closed_loop_rhs(
    p: &DVector<f64>,
    t: f64,
    motion: &dyn Motion,
    graph: &OrientedGraph,
    params: &ControlParams,
    floor: f64,
) -> Result<DVector<f64>> {
    let d = motion.dim();
    let desired = motion.state(t)?;
    let cfg = Configuration::new(d, p.clone())?;
    let mut out = DVector::zeros(p.len());
    for i in 0..graph.vertex_count() {
        let neighbors = graph
            .neighbors(i)
            .iter()
            .map(|&j| {
                Ok(NeighborData {
                    bearing: agent_bearing(&cfg, i, j, floor)?,
                    desired_relative: desired.p.rows(j * d, d) - desired.p.rows(i * d, d),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let v_star = desired.v.rows(i * d, d).into_owned();
        out.rows_mut(i * d, d)
            .copy_from(&agent_control(&neighbors, &v_star, params));
    }
    Ok(out)
}

/// Configuration error `p̃ = p - p*` and its centered form.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState {
    pub p_tilde: DVector<f64>,
    /// `δ = p̃ - U p̄(0)`.
    pub delta: DVector<f64>,
    /// Relative centroid `p̄ = (1/n) Uᵀ p̃`.
    pub centroid: DVector<f64>,
    /// `p̄(0)`.
    pub initial_centroid: DVector<f64>,
}

impl ErrorState {
    /// `p_tilde0` is the error at `t = 0`, which fixes the centering term.
    pub fn new(p: &DVector<f64>, p_star: &DVector<f64>, p_tilde0: &DVector<f64>, d: usize) -> Self {
        let p_tilde = p - p_star;
        let initial_centroid = linalg::block_mean(p_tilde0, d);
        let delta = linalg::shift_blocks(&p_tilde, &initial_centroid);
        let centroid = linalg::block_mean(&p_tilde, d);
        Self {
            p_tilde,
            delta,
            centroid,
            initial_centroid,
        }
    }

    pub fn centroid_drift(&self) -> DVector<f64> {
        &self.centroid - &self.initial_centroid
    }
}

/// Largest `‖p̄(t) - p̄(0)‖` over a run.
pub fn centroid_drift(log: &SimLog) -> f64 {
    log.centroid_drift.iter().copied().fold(0.0, f64::max)
}
