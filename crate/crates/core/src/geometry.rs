//! Projection operators, bearings and the bearing Laplacian.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::graphs::{IncidenceMatrix, OrientedGraph};
use crate::linalg;

/// Minimum admissible distance between neighbors before a bearing is
/// considered undefined.
pub const DEFAULT_SEPARATION_FLOOR: f64 = 1e-6;

/// Tolerance on `|‖y‖ - 1|` accepted by [`projector`].
pub const UNIT_TOL: f64 = 1e-9;

/// Threshold on the sine of the largest principal angle when comparing
/// null spaces.
pub const SUBSPACE_TOL: f64 = 1e-8;

/// Stacked agent positions `p = [p_1ᵀ, …, p_nᵀ]ᵀ` in `R^{dn}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    d: usize,
    p: DVector<f64>,
}

impl Configuration {
    pub fn new(d: usize, p: DVector<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be at least 2, got {d}"
            )));
        }
        if !p.len().is_multiple_of(d) || p.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: d * (p.len() / d).max(1),
                got: p.len(),
            });
        }
        Ok(Self { d, p })
    }

    /// Builds a configuration from per-agent points, all of the same length.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(d * points.len());
        for pt in points {
            if pt.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: pt.len(),
                });
            }
            flat.extend_from_slice(pt);
        }
        Self::new(d, DVector::from_vec(flat))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn agent_count(&self) -> usize {
        self.p.len() / self.d
    }

    pub fn stacked(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn into_stacked(self) -> DVector<f64> {
        self.p
    }

    pub fn point(&self, i: usize) -> DVectorView<'_, f64> {
        self.p.rows(i * self.d, self.d)
    }

    /// Smallest distance between neighbors in `graph`.
    pub fn min_neighbor_distance(&self, graph: &OrientedGraph) -> f64 {
        graph
            .edges()
            .iter()
            .map(|&(i, j)| (self.point(j) - self.point(i)).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `π_y = I_d - y yᵀ` for a unit vector `y`.
pub fn projector(y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = y.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitVector { norm });
    }
    Ok(unit_projector(y))
}

fn unit_projector(y: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::identity(y.len(), y.len()) - y * y.transpose()
}

/// Unit vector from `p_i` toward `p_j`.
pub fn bearing(p_i: &DVectorView<'_, f64>, p_j: &DVectorView<'_, f64>, floor: f64) -> Result<DVector<f64>> {
    let rel = p_j - p_i;
    let distance = rel.norm();
    if distance <= floor {
        return Err(Error::CoincidentAgents { agents: None, distance });
    }
    Ok(rel / distance)
}

/// Bearing `g_ij` between agents `i` and `j` of `cfg`.
pub fn agent_bearing(cfg: &Configuration, i: usize, j: usize, floor: f64) -> Result<DVector<f64>> {
    bearing(&cfg.point(i), &cfg.point(j), floor).map_err(|e| match e {
        Error::CoincidentAgents { distance, .. } => Error::CoincidentAgents {
            agents: Some((i, j)),
            distance,
        },
        other => other,
    })
}

/// Per-edge vectors, bearings and projectors of a formation.
#[derive(Debug, Clone)]
pub struct EdgeGeometry {
    pub edge_vectors: Vec<DVector<f64>>,
    pub bearings: Vec<DVector<f64>>,
    pub projectors: Vec<DMatrix<f64>>,
}

impl EdgeGeometry {
    pub fn new(cfg: &Configuration, graph: &OrientedGraph, floor: f64) -> Result<Self> {
        let m = graph.edge_count();
        let mut edge_vectors = Vec::with_capacity(m);
        let mut bearings = Vec::with_capacity(m);
        let mut projectors = Vec::with_capacity(m);
        for &(tail, head) in graph.edges() {
            let e = cfg.point(head) - cfg.point(tail);
            let g = agent_bearing(cfg, tail, head, floor)?;
            projectors.push(unit_projector(&g));
            bearings.push(g);
            edge_vectors.push(e);
        }
        Ok(Self {
            edge_vectors,
            bearings,
            projectors,
        })
    }

    /// `Π = blockdiag(π_{g_k})`.
    pub fn stacked_projector(&self) -> DMatrix<f64> {
        let d = self.bearings.first().map_or(0, |g| g.len());
        let m = self.projectors.len();
        let mut pi = DMatrix::zeros(d * m, d * m);
        for (k, proj) in self.projectors.iter().enumerate() {
            pi.view_mut((k * d, k * d), (d, d)).copy_from(proj);
        }
        pi
    }

    /// `L_B x` assembled edge by edge, without forming `L_B`.
    pub fn apply_laplacian(&self, graph: &OrientedGraph, x: &DVector<f64>) -> DVector<f64> {
        let d = self.bearings.first().map_or(1, |g| g.len());
        let mut out = DVector::zeros(x.len());
        for (k, &(tail, head)) in graph.edges().iter().enumerate() {
            let w = &self.projectors[k] * (x.rows(head * d, d) - x.rows(tail * d, d));
            let mut h = out.rows_mut(head * d, d);
            h += &w;
            let mut t = out.rows_mut(tail * d, d);
            t -= &w;
        }
        out
    }
}

fn edge_endpoints(h: &DMatrix<f64>, k: usize) -> (usize, usize) {
    let row = h.row(k);
    let tail = row.iter().position(|&v| v < 0.0).unwrap_or(0);
    let head = row.iter().position(|&v| v > 0.0).unwrap_or(0);
    (tail, head)
}

/// `L_B = H̄ᵀ Π H̄` for the configuration `cfg`.
pub fn bearing_laplacian(cfg: &Configuration, inc: &IncidenceMatrix, floor: f64) -> Result<DMatrix<f64>> {
    let d = cfg.dim();
    if inc.d != d || inc.h_bar.ncols() != cfg.stacked().len() {
        return Err(Error::DimensionMismatch {
            expected: inc.h_bar.ncols(),
            got: cfg.stacked().len(),
        });
    }
    let e = &inc.h_bar * cfg.stacked();
    let m = inc.h.nrows();
    let mut pi = DMatrix::zeros(d * m, d * m);
    for k in 0..m {
        let ek = e.rows(k * d, d);
        let len = ek.norm();
        if len <= floor {
            let (tail, head) = edge_endpoints(&inc.h, k);
            return Err(Error::CoincidentAgents {
                agents: Some((tail, head)),
                distance: len,
            });
        }
        let g = ek / len;
        pi.view_mut((k * d, k * d), (d, d)).copy_from(&unit_projector(&g));
    }
    Ok(inc.h_bar.transpose() * pi * &inc.h_bar)
}

/// Rank and null-space diagnostics of a bearing Laplacian.
#[derive(Debug, Clone)]
pub struct NullSpaceReport {
    pub rank: usize,
    /// `rank == dn - d - 1`.
    pub is_maximal: bool,
    pub null_basis: DMatrix<f64>,
    /// Sine of the largest principal angle between the numerical null space
    /// and `Span{U, p}`; only computed when the rank is maximal.
    pub gap_to_expected: Option<f64>,
}

impl NullSpaceReport {
    /// Whether the null space equals `Span{U, p}` within [`SUBSPACE_TOL`].
    pub fn matches_expected(&self) -> Option<bool> {
        self.gap_to_expected.map(|g| g < SUBSPACE_TOL)
    }
}

pub fn null_space_analysis(l_b: &DMatrix<f64>, cfg: &Configuration) -> NullSpaceReport {
    let d = cfg.dim();
    let n = cfg.agent_count();
    let rank = linalg::numerical_rank(l_b, linalg::RANK_RTOL);
    let is_maximal = rank + d + 1 == d * n;
    let null_basis = linalg::null_basis(l_b, linalg::RANK_RTOL);
    let gap_to_expected = is_maximal.then(|| {
        let mut expected = DMatrix::zeros(d * n, d + 1);
        expected.columns_mut(0, d).copy_from(&linalg::translation_basis(n, d));
        expected.set_column(d, cfg.stacked());
        linalg::subspace_gap(&null_basis, &expected)
    });
    NullSpaceReport {
        rank,
        is_maximal,
        null_basis,
        gap_to_expected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::incidence_matrix;
    use approx::assert_relative_eq;

    fn square() -> Configuration {
        Configuration::from_points(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap()
    }

    #[test]
    fn axis_projectors() {
        let p = projector(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        let p = projector(&DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        assert_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0])));
        let y = DVector::from_vec(vec![0.6, 0.8]);
        assert!((projector(&y).unwrap() * &y).norm() < 1e-15);
    }

    #[test]
    fn projector_rejects_non_unit() {
        let err = projector(&DVector::from_vec(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NonUnitVector { .. }));
    }

    #[test]
    fn bearing_is_antisymmetric() {
        let a = DVector::from_vec(vec![0.0, 0.0]);
        let b = DVector::from_vec(vec![3.0, 4.0]);
        let g = bearing(&a.as_view(), &b.as_view(), DEFAULT_SEPARATION_FLOOR).unwrap();
        assert_relative_eq!(g, DVector::from_vec(vec![0.6, 0.8]), epsilon = 1e-15);
        let back = bearing(&b.as_view(), &a.as_view(), DEFAULT_SEPARATION_FLOOR).unwrap();
        assert_relative_eq!(back, -g, epsilon = 1e-15);
        assert!(matches!(
            bearing(&a.as_view(), &a.as_view(), DEFAULT_SEPARATION_FLOOR),
            Err(Error::CoincidentAgents { .. })
        ));
    }

    #[test]
    fn square_complete_graph_is_maximal() {
        let cfg = square();
        let g = OrientedGraph::complete(4).unwrap();
        let l_b = bearing_laplacian(&cfg, &incidence_matrix(&g, 2), DEFAULT_SEPARATION_FLOOR).unwrap();
        let report = null_space_analysis(&l_b, &cfg);
        assert_eq!(report.rank, 5);
        assert!(report.is_maximal);
        assert_eq!(report.matches_expected(), Some(true));
        assert!((&l_b * cfg.stacked()).norm() < 1e-12);
        assert!((&l_b * linalg::translation_basis(4, 2)).norm() < 1e-12);
    }

    #[test]
    fn collinear_path_is_not_maximal() {
        let cfg = Configuration::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.5, 0.0]]).unwrap();
        let g = OrientedGraph::path(3).unwrap();
        let l_b = bearing_laplacian(&cfg, &incidence_matrix(&g, 2), DEFAULT_SEPARATION_FLOOR).unwrap();
        let report = null_space_analysis(&l_b, &cfg);
        assert_eq!(report.rank, 2);
        assert!(!report.is_maximal);
        assert!(report.gap_to_expected.is_none());
    }

    #[test]
    fn two_agents_rank_one() {
        let cfg = Configuration::from_points(&[vec![0.3, -1.0], vec![2.0, 0.5]]).unwrap();
        let g = OrientedGraph::path(2).unwrap();
        let l_b = bearing_laplacian(&cfg, &incidence_matrix(&g, 2), DEFAULT_SEPARATION_FLOOR).unwrap();
        let mut ev: Vec<f64> = l_b.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[..3].iter().all(|v| v.abs() < 1e-12));
        assert_relative_eq!(ev[3], 2.0, epsilon = 1e-12);
        let report = null_space_analysis(&l_b, &cfg);
        assert_eq!(report.rank, 1);
        assert!(report.is_maximal);
        assert_eq!(report.matches_expected(), Some(true));
    }

    #[test]
    fn coincident_neighbors_propagate() {
        let cfg = Configuration::from_points(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let g = OrientedGraph::path(3).unwrap();
        let err = bearing_laplacian(&cfg, &incidence_matrix(&g, 2), DEFAULT_SEPARATION_FLOOR).unwrap_err();
        assert_eq!(
            err,
            Error::CoincidentAgents {
                agents: Some((0, 1)),
                distance: 0.0
            }
        );
        assert!(EdgeGeometry::new(&cfg, &g, DEFAULT_SEPARATION_FLOOR).is_err());
    }

    #[test]
    fn edge_assembly_matches_dense_form() {
        let cfg = square();
        let g = OrientedGraph::cycle(4).unwrap();
        let inc = incidence_matrix(&g, 2);
        let dense = bearing_laplacian(&cfg, &inc, DEFAULT_SEPARATION_FLOOR).unwrap();
        let geo = EdgeGeometry::new(&cfg, &g, DEFAULT_SEPARATION_FLOOR).unwrap();
        let via_pi = inc.h_bar.transpose() * geo.stacked_projector() * &inc.h_bar;
        assert!((&dense - via_pi).norm() < 1e-14);
        let x = DVector::from_fn(8, |i, _| (i as f64 * 0.7).sin());
        assert!((&dense * &x - geo.apply_laplacian(&g, &x)).norm() < 1e-14);
    }

    #[test]
    fn configuration_validation() {
        assert!(Configuration::new(2, DVector::zeros(5)).is_err());
        assert!(Configuration::new(1, DVector::zeros(4)).is_err());
        assert!(Configuration::from_points(&[vec![0.0, 1.0], vec![1.0]]).is_err());
    }
}
