//! Configuration observer driven by bearings and known velocities.
//!
//! `ṗ̂ = v - L_B(t) p̂` recovers `p(t)` up to the translation
//! `(1/n) U Uᵀ (p̂(0) - p(0))` when the observed formation is bearing
//! persistently exciting.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{bearing_laplacian, Configuration};
use crate::graphs::{incidence_matrix, OrientedGraph};
use crate::linalg;
use crate::simulation::{integrate, Abort, Interrupted};
use crate::trajectories::Motion;

/// Half-width of the box used for random initial estimates.
pub const DEFAULT_ESTIMATE_SPREAD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub p_hat: DVector<f64>,
    pub t: f64,
}

/// `v - L_B p̂`.
pub fn observer_rhs(state: &ObserverState, v: &DVector<f64>, l_b: &DMatrix<f64>) -> Result<DVector<f64>> {
    if state.p_hat.len() != v.len() || l_b.ncols() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: state.p_hat.len(),
        });
    }
    Ok(v - l_b * &state.p_hat)
}

/// Reproducible random estimate in `[-spread, spread]^{dn}`.
pub fn random_estimate(len: usize, seed: u64, spread: f64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(len, |_, _| rng.random_range(-spread..=spread))
}

#[derive(Debug, Clone)]
pub struct ObserverLog {
    pub d: usize,
    pub times: Vec<f64>,
    pub estimates: Vec<DVector<f64>>,
    pub truth: Vec<DVector<f64>>,
    /// `(1/n) U Uᵀ (p̂(0) - p(0))`, as one block of length `d`.
    pub offset: DVector<f64>,
    pub zeta_norm: Vec<f64>,
    /// `‖Uᵀ ζ‖`.
    pub zeta_centroid_norm: Vec<f64>,
    pub aborted: Option<Abort>,
}

impl ObserverLog {
    /// `ζ` at sample `k`.
    pub fn zeta(&self, k: usize) -> DVector<f64> {
        let diff = &self.estimates[k] - &self.truth[k];
        linalg::shift_blocks(&diff, &self.offset)
    }

    /// Block mean of `p̂ - p` at the last sample; converges to
    /// [`ObserverLog::offset`] under persistent excitation.
    pub fn final_offset(&self) -> DVector<f64> {
        let k = self.times.len() - 1;
        linalg::block_mean(&(&self.estimates[k] - &self.truth[k]), self.d)
    }
}

/// Integrates the observer with `motion` as the true trajectory: bearings
/// come from `p(t) = p*(t)` and the known velocities are `v*(t)`.
pub fn run_observer(
    motion: &dyn Motion,
    graph: &OrientedGraph,
    p_hat0: &DVector<f64>,
    horizon: f64,
    dt: f64,
    floor: f64,
) -> Result<ObserverLog> {
    let d = motion.dim();
    let n = graph.vertex_count();
    if motion.agent_count() != n || p_hat0.len() != d * n {
        return Err(Error::DimensionMismatch {
            expected: d * n,
            got: p_hat0.len(),
        });
    }
    if !graph.has_spanning_tree() {
        return Err(Error::DisconnectedGraph);
    }
    let inc = incidence_matrix(graph, d);
    let rhs = |t: f64, p_hat: &DVector<f64>| {
        let truth = motion.state(t)?;
        let l_b = bearing_laplacian(&Configuration::new(d, truth.p)?, &inc, floor)?;
        observer_rhs(
            &ObserverState {
                p_hat: p_hat.clone(),
                t,
            },
            &truth.v,
            &l_b,
        )
    };
    let (traj, aborted) = match integrate(rhs, p_hat0.clone(), horizon, dt) {
        Ok(traj) => (traj, None),
        Err(Interrupted { partial, error }) => {
            let t = match &error {
                Error::AtTime { t, .. } => *t,
                _ => 0.0,
            };
            (partial, Some(Abort { t, error }))
        }
    };
    let p0 = motion.state(0.0)?.p;
    let offset = linalg::block_mean(&(p_hat0 - &p0), d);
    let mut log = ObserverLog {
        d,
        times: Vec::with_capacity(traj.times.len()),
        estimates: Vec::with_capacity(traj.times.len()),
        truth: Vec::with_capacity(traj.times.len()),
        offset,
        zeta_norm: Vec::new(),
        zeta_centroid_norm: Vec::new(),
        aborted,
    };
    for (t, p_hat) in traj.times.into_iter().zip(traj.states) {
        let truth = motion.state(t)?.p;
        let zeta = linalg::shift_blocks(&(&p_hat - &truth), &log.offset);
        log.zeta_norm.push(zeta.norm());
        log.zeta_centroid_norm
            .push((linalg::block_mean(&zeta, d) * n as f64).norm());
        log.times.push(t);
        log.estimates.push(p_hat);
        log.truth.push(truth);
    }
    Ok(log)
}
