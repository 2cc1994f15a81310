//! Persistence-of-excitation tests on sampled trajectories.
//!
//! "For all t" cannot be checked numerically, so every test here scans all
//! windows `[t, t + T]` whose start lies on the sampling grid and whose end
//! stays within the horizon, integrates with the composite trapezoid rule and
//! reduces with a minimum.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, EdgeGeometry, DEFAULT_SEPARATION_FLOOR};
use crate::graphs::{graph_laplacian, incidence_matrix, OrientedGraph};
use crate::linalg;
use crate::trajectories::{DesiredState, Motion};

/// Excitation levels at or below this value are treated as numerical noise.
pub const DEFAULT_MU_FLOOR: f64 = 1e-6;

/// Window length must be at least this many sample steps.
pub const MIN_STEPS_PER_WINDOW: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pe,
    NotPeOnHorizon,
}

impl Verdict {
    pub fn is_pe(self) -> bool {
        self == Verdict::Pe
    }
}

/// Result of a windowed excitation scan.
#[derive(Debug, Clone)]
pub struct PeWitness {
    pub window: f64,
    /// Minimum over all windows of the per-window excitation level.
    pub mu: f64,
    /// `(window start, excitation level of that window)`.
    pub window_minima: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// Window, sampling and threshold settings for the motion-level tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeSettings {
    pub window: f64,
    pub horizon: f64,
    pub dt: f64,
    pub mu_floor: f64,
}

impl PeSettings {
    pub fn new(window: f64, horizon: f64, dt: f64) -> Self {
        Self {
            window,
            horizon,
            dt,
            mu_floor: DEFAULT_MU_FLOOR,
        }
    }
}

fn window_steps(sample_count: usize, dt: f64, window: f64) -> Result<usize> {
    if dt.is_nan() || dt <= 0.0 || window.is_nan() || window <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "window {window} and step {dt} must be positive"
        )));
    }
    if dt > window / MIN_STEPS_PER_WINDOW * (1.0 + 1e-9) {
        return Err(Error::StepTooCoarse { dt, window });
    }
    let horizon = sample_count.saturating_sub(1) as f64 * dt;
    if horizon + 1e-9 * dt < 2.0 * window {
        return Err(Error::HorizonTooShort { horizon, window });
    }
    Ok((window / dt).round() as usize)
}

/// Scans all windows of the sampled trajectory and applies `measure` to each
/// window integral.
fn scan_windows<F>(samples: &[DMatrix<f64>], dt: f64, window: f64, measure: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&DMatrix<f64>) -> f64 + Sync,
{
    let w = window_steps(samples.len(), dt, window)?;
    let (rows, cols) = samples[0].shape();
    let mut prefix = Vec::with_capacity(samples.len());
    prefix.push(DMatrix::zeros(rows, cols));
    for k in 1..samples.len() {
        let next = &prefix[k - 1] + (&samples[k - 1] + &samples[k]) * (0.5 * dt);
        prefix.push(next);
    }
    let starts = samples.len() - w;
    Ok((0..starts)
        .into_par_iter()
        .map(|k| {
            let integral = &prefix[k + w] - &prefix[k];
            (k as f64 * dt, measure(&integral))
        })
        .collect())
}

fn witness(window: f64, window_minima: Vec<(f64, f64)>, mu_floor: f64) -> PeWitness {
    let mu = window_minima.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let verdict = if mu > mu_floor {
        Verdict::Pe
    } else {
        Verdict::NotPeOnHorizon
    };
    PeWitness {
        window,
        mu,
        window_minima,
        verdict,
    }
}

/// Tests `∫_t^{t+T} Σ(τ) dτ ≥ μ I` on a uniformly sampled PSD trajectory.
pub fn is_pe_matrix(samples: &[DMatrix<f64>], dt: f64, window: f64, mu_floor: f64) -> Result<PeWitness> {
    let minima = scan_windows(samples, dt, window, linalg::min_eigenvalue)?;
    Ok(witness(window, minima, mu_floor))
}

/// Tests a sampled unit-vector trajectory via its projector `π_{y(t)}`.
pub fn is_pe_direction(directions: &[DVector<f64>], dt: f64, window: f64, mu_floor: f64) -> Result<PeWitness> {
    let projectors = directions
        .iter()
        .map(crate::geometry::projector)
        .collect::<Result<Vec<_>>>()?;
    is_pe_matrix(&projectors, dt, window, mu_floor)
}

/// Derivative criterion: every window contains at least one sample with
/// `‖ẏ‖ ≥ eps`.
pub fn pe_by_derivative(derivatives: &[DVector<f64>], dt: f64, window: f64, eps: f64) -> Result<bool> {
    let w = window_steps(derivatives.len(), dt, window)?;
    let norms: Vec<f64> = derivatives.iter().map(|v| v.norm()).collect();
    // Sliding maximum over windows of w + 1 samples.
    let mut deque = std::collections::VecDeque::new();
    for (k, &v) in norms.iter().enumerate() {
        while deque.back().is_some_and(|&j: &usize| norms[j] <= v) {
            deque.pop_back();
        }
        deque.push_back(k);
        if k >= w {
            let start = k - w;
            while deque.front().is_some_and(|&j| j < start) {
                deque.pop_front();
            }
            if norms[deque[0]] < eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Samples `motion` on the grid `t_k = k·dt` covering `[0, horizon]`.
pub fn sample_motion(motion: &dyn Motion, horizon: f64, dt: f64) -> Result<Vec<DesiredState>> {
    let steps = (horizon / dt + 1e-9).floor() as usize;
    (0..=steps).map(|k| motion.state(k as f64 * dt)).collect()
}

/// Lower bound on the number of persistently exciting bearings needed for a
/// planar formation with `n` agents and `m` edges.
pub fn min_pe_edges_2d(n: usize, m: usize) -> Result<usize> {
    if n < 2 || m + 1 < n || m > n * (n - 1) / 2 {
        return Err(Error::InvalidCount { n, m });
    }
    if m + 3 >= 2 * n {
        Ok(1)
    } else {
        // m = 2n - 3 - j
        Ok(2 * n - 3 - m + 1)
    }
}

/// Relative excitation test `∫ L_B dτ ≥ μ L` on the range of `L`.
struct RelativeMeasure {
    basis: DMatrix<f64>,
    reference: DMatrix<f64>,
}

impl RelativeMeasure {
    fn new(graph: &OrientedGraph, d: usize) -> Self {
        let n = graph.vertex_count();
        let basis = linalg::centroid_complement_basis(n, d);
        let l = graph_laplacian(&incidence_matrix(graph, d));
        let reference = basis.transpose() * l * &basis;
        Self { basis, reference }
    }

    fn level(&self, integral: &DMatrix<f64>) -> f64 {
        let reduced = self.basis.transpose() * integral * &self.basis;
        linalg::min_generalized_eigenvalue(&reduced, &self.reference).unwrap_or(f64::NAN)
    }
}

fn check_motion(motion: &dyn Motion, graph: &OrientedGraph) -> Result<()> {
    if motion.agent_count() != graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.vertex_count(),
            got: motion.agent_count(),
        });
    }
    if !graph.has_spanning_tree() {
        return Err(Error::DisconnectedGraph);
    }
    Ok(())
}

struct SampledFormation {
    laplacians: Vec<DMatrix<f64>>,
    bearings: Vec<Vec<DVector<f64>>>,
    ranks: Vec<usize>,
}

fn sample_formation(motion: &dyn Motion, graph: &OrientedGraph, settings: &PeSettings) -> Result<SampledFormation> {
    let d = motion.dim();
    let states = sample_motion(motion, settings.horizon, settings.dt)?;
    let per_sample = states
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let cfg = Configuration::new(d, s.p.clone())?;
            let geo = EdgeGeometry::new(&cfg, graph, DEFAULT_SEPARATION_FLOOR).map_err(|e| Error::AtTime {
                t: k as f64 * settings.dt,
                source: Box::new(e),
            })?;
            let inc = incidence_matrix(graph, d);
            let l_b = inc.h_bar.transpose() * geo.stacked_projector() * &inc.h_bar;
            let rank = linalg::numerical_rank(&l_b, linalg::RANK_RTOL);
            Ok((l_b, geo.bearings, rank))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SampledFormation {
        laplacians: Vec::with_capacity(per_sample.len()),
        bearings: vec![Vec::with_capacity(per_sample.len()); graph.edge_count()],
        ranks: Vec::with_capacity(per_sample.len()),
    };
    for (l_b, bearings, rank) in per_sample {
        out.laplacians.push(l_b);
        for (k, g) in bearings.into_iter().enumerate() {
            out.bearings[k].push(g);
        }
        out.ranks.push(rank);
    }
    Ok(out)
}

/// Tests whether the desired bearing Laplacian is persistently exciting
/// relative to the graph Laplacian.
pub fn is_pe_bearing_laplacian(motion: &dyn Motion, graph: &OrientedGraph, settings: &PeSettings) -> Result<PeWitness> {
    check_motion(motion, graph)?;
    let sampled = sample_formation(motion, graph, settings)?;
    let measure = RelativeMeasure::new(graph, motion.dim());
    let minima = scan_windows(&sampled.laplacians, settings.dt, settings.window, |m| measure.level(m))?;
    Ok(witness(settings.window, minima, settings.mu_floor))
}

/// Which structural rules applied to the formation, and whether the computed
/// verdicts agree with them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StructuralChecks {
    /// Acyclic connected graph: BPE iff every bearing is PE.
    pub acyclic_rule: Option<bool>,
    /// Maximal rank at every sample: BPE iff at least one bearing is PE.
    pub rigid_rule: Option<bool>,
    /// Planar BPE formation: PE bearing count reaches the counting bound.
    pub counting_rule: Option<bool>,
}

impl StructuralChecks {
    pub fn consistent(&self) -> bool {
        [self.acyclic_rule, self.rigid_rule, self.counting_rule]
            .iter()
            .all(|r| r.unwrap_or(true))
    }
}

/// Full bearing-persistence analysis of a desired motion over a graph.
#[derive(Debug, Clone)]
pub struct BpeReport {
    pub is_bpe: bool,
    /// Relative test of the bearing Laplacian.
    pub witness: PeWitness,
    /// One direction test per edge, in edge order.
    pub per_edge: Vec<PeWitness>,
    /// Window minima of the stacked projector `Π`, which is block diagonal,
    /// so each entry is the minimum over the per-edge levels of that window.
    pub projector_witness: PeWitness,
    /// Numerical rank of `L_B(t)` at every sample.
    pub rank_trace: Vec<usize>,
    /// `dn - d - 1`.
    pub maximal_rank: usize,
    pub min_pe_bound: Option<usize>,
    pub structural: StructuralChecks,
}

impl BpeReport {
    pub fn pe_edge_count(&self) -> usize {
        self.per_edge.iter().filter(|w| w.verdict.is_pe()).count()
    }

    pub fn rank_always_maximal(&self) -> bool {
        self.rank_trace.iter().all(|&r| r == self.maximal_rank)
    }
}

pub fn is_bpe(motion: &dyn Motion, graph: &OrientedGraph, settings: &PeSettings) -> Result<BpeReport> {
    check_motion(motion, graph)?;
    let d = motion.dim();
    let n = graph.vertex_count();
    let m = graph.edge_count();
    let sampled = sample_formation(motion, graph, settings)?;
    let measure = RelativeMeasure::new(graph, d);
    let minima = scan_windows(&sampled.laplacians, settings.dt, settings.window, |mat| {
        measure.level(mat)
    })?;
    let witness_rel = witness(settings.window, minima, settings.mu_floor);

    let per_edge = sampled
        .bearings
        .iter()
        .map(|traj| is_pe_direction(traj, settings.dt, settings.window, settings.mu_floor))
        .collect::<Result<Vec<_>>>()?;

    let projector_minima = (0..witness_rel.window_minima.len())
        .map(|w| {
            let start = witness_rel.window_minima[w].0;
            let level = per_edge
                .iter()
                .map(|e| e.window_minima[w].1)
                .fold(f64::INFINITY, f64::min);
            (start, level)
        })
        .collect();
    let projector_witness = witness(settings.window, projector_minima, settings.mu_floor);

    let maximal_rank = d * n - d - 1;
    let is_bpe = witness_rel.verdict.is_pe();
    let pe_edges = per_edge.iter().filter(|w| w.verdict.is_pe()).count();
    let min_pe_bound = if d == 2 { Some(min_pe_edges_2d(n, m)?) } else { None };

    let structural = StructuralChecks {
        acyclic_rule: graph.is_acyclic().then_some(is_bpe == (pe_edges == m)),
        rigid_rule: sampled
            .ranks
            .iter()
            .all(|&r| r == maximal_rank)
            .then_some(is_bpe == (pe_edges >= 1)),
        counting_rule: match (min_pe_bound, is_bpe) {
            (Some(bound), true) => Some(pe_edges >= bound),
            _ => None,
        },
    };

    Ok(BpeReport {
        is_bpe,
        witness: witness_rel,
        per_edge,
        projector_witness,
        rank_trace: sampled.ranks,
        maximal_rank,
        min_pe_bound,
        structural,
    })
}
