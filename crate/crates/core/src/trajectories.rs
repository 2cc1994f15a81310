//! Desired formation motions `p*(t)`, `v*(t)`.
//!
//! The built-in [`DesiredMotion`] is a similarity motion: a planar rotation
//! about a center, a constant scale and a constant drift velocity, with an
//! optional sinusoidal shape deformation applied before the rotation.
//! Anything else can implement [`Motion`] directly.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::DEFAULT_SEPARATION_FLOOR;

/// Desired configuration and its time derivative at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredState {
    pub p: DVector<f64>,
    pub v: DVector<f64>,
}

/// A time-parameterized desired formation.
pub trait Motion: Send + Sync {
    fn dim(&self) -> usize;
    fn agent_count(&self) -> usize;
    fn state(&self, t: f64) -> Result<DesiredState>;

    /// Fundamental period, when the motion is periodic.
    fn period(&self) -> Option<f64> {
        None
    }
}

type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Rotation part `R(t)` of the motion.
#[derive(Clone)]
pub enum Rotation {
    Identity,
    /// Rotation by angle `omega * t` in the plane of coordinate axes `(a, b)`,
    /// with `R[a][a] = cos`, `R[a][b] = -sin`, `R[b][a] = sin`, `R[b][b] = cos`.
    Planar {
        axes: (usize, usize),
        omega: f64,
    },
    /// Arbitrary matrix function with its derivative. Not required to be
    /// orthogonal; [`check_similarity_validity`] reports when it is not.
    Matrix {
        r: MatrixFn,
        r_dot: MatrixFn,
    },
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rotation::Identity => write!(f, "Identity"),
            Rotation::Planar { axes, omega } => f
                .debug_struct("Planar")
                .field("axes", axes)
                .field("omega", omega)
                .finish(),
            Rotation::Matrix { .. } => write!(f, "Matrix(..)"),
        }
    }
}

impl Rotation {
    pub fn matrix(&self, d: usize, t: f64) -> DMatrix<f64> {
        match self {
            Rotation::Identity => DMatrix::identity(d, d),
            Rotation::Planar { axes: (a, b), omega } => {
                let (s, c) = (omega * t).sin_cos();
                let mut r = DMatrix::identity(d, d);
                r[(*a, *a)] = c;
                r[(*a, *b)] = -s;
                r[(*b, *a)] = s;
                r[(*b, *b)] = c;
                r
            }
            Rotation::Matrix { r, .. } => r(t),
        }
    }

    pub fn derivative(&self, d: usize, t: f64) -> DMatrix<f64> {
        match self {
            Rotation::Identity => DMatrix::zeros(d, d),
            Rotation::Planar { axes: (a, b), omega } => {
                let (s, c) = (omega * t).sin_cos();
                let mut r = DMatrix::zeros(d, d);
                r[(*a, *a)] = -omega * s;
                r[(*a, *b)] = -omega * c;
                r[(*b, *a)] = omega * c;
                r[(*b, *b)] = -omega * s;
                r
            }
            Rotation::Matrix { r_dot, .. } => r_dot(t),
        }
    }
}

/// Fixed point of the rotation and scaling.
#[derive(Debug, Clone, PartialEq)]
pub enum Center {
    Point(DVector<f64>),
    /// Initial desired position of the given (0-based) agent.
    Agent(usize),
}

/// Shape offset `sin(νt)·A + (1 - cos(νt))·B`, zero at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    pub freq: f64,
    pub sin_amp: DVector<f64>,
    pub cos_amp: DVector<f64>,
}

impl Deformation {
    fn offset(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let (s, c) = (self.freq * t).sin_cos();
        let pos = &self.sin_amp * s + &self.cos_amp * (1.0 - c);
        let vel = &self.sin_amp * (self.freq * c) + &self.cos_amp * (self.freq * s);
        (pos, vel)
    }
}

/// `p*_i(t) = c + s·R(t)ᵀ(q_i(t) - c) + drift·t`, where `q(t)` is `p0` plus
/// the optional deformation.
#[derive(Debug, Clone)]
pub struct DesiredMotion {
    d: usize,
    p0: DVector<f64>,
    rotation: Rotation,
    scale: f64,
    drift: DVector<f64>,
    center: Center,
    deformation: Option<Deformation>,
    floor: f64,
}

impl DesiredMotion {
    /// A static formation at `p0`.
    pub fn new(d: usize, p0: DVector<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be at least 2, got {d}"
            )));
        }
        if p0.is_empty() || !p0.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d * (p0.len() / d).max(1),
                got: p0.len(),
            });
        }
        Ok(Self {
            d,
            p0,
            rotation: Rotation::Identity,
            scale: 1.0,
            drift: DVector::zeros(d),
            center: Center::Point(DVector::zeros(d)),
            deformation: None,
            floor: DEFAULT_SEPARATION_FLOOR,
        })
    }

    pub fn with_rotation(mut self, rotation: Rotation) -> Result<Self> {
        if let Rotation::Planar { axes: (a, b), omega } = rotation {
            if a == b || a >= self.d || b >= self.d {
                return Err(Error::InvalidParameter(format!(
                    "rotation plane ({a}, {b}) is not a pair of distinct axes below {}",
                    self.d
                )));
            }
            if !omega.is_finite() {
                return Err(Error::InvalidParameter("omega must be finite".into()));
            }
        }
        self.rotation = rotation;
        Ok(self)
    }

    pub fn with_drift(mut self, drift: DVector<f64>) -> Result<Self> {
        if drift.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: drift.len(),
            });
        }
        self.drift = drift;
        Ok(self)
    }

    pub fn with_center(mut self, center: Center) -> Result<Self> {
        match &center {
            Center::Point(c) if c.len() != self.d => {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: c.len(),
                })
            }
            Center::Agent(i) if *i >= self.agent_count() => {
                return Err(Error::InvalidParameter(format!(
                    "rotation center agent {} out of range",
                    i + 1
                )))
            }
            _ => {}
        }
        self.center = center;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn with_deformation(mut self, deformation: Deformation) -> Result<Self> {
        let len = self.p0.len();
        for amp in [&deformation.sin_amp, &deformation.cos_amp] {
            if amp.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    got: amp.len(),
                });
            }
        }
        self.deformation = Some(deformation);
        Ok(self)
    }

    pub fn with_separation_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.p0
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn center_point(&self) -> DVector<f64> {
        match &self.center {
            Center::Point(c) => c.clone(),
            Center::Agent(i) => self.p0.rows(i * self.d, self.d).into_owned(),
        }
    }

    /// Evaluates without the separation check.
    pub fn eval_unchecked(&self, t: f64) -> DesiredState {
        let d = self.d;
        let n = self.agent_count();
        let c = self.center_point();
        let r_t = self.rotation.matrix(d, t).transpose();
        let r_dot_t = self.rotation.derivative(d, t).transpose();
        let (shape, shape_vel) = match &self.deformation {
            Some(def) => {
                let (off, vel) = def.offset(t);
                (&self.p0 + off, vel)
            }
            None => (self.p0.clone(), DVector::zeros(self.p0.len())),
        };
        let mut p = DVector::zeros(d * n);
        let mut v = DVector::zeros(d * n);
        for i in 0..n {
            let rel = shape.rows(i * d, d) - &c;
            let pi = &c + (&r_t * &rel) * self.scale + &self.drift * t;
            let vi = (&r_dot_t * &rel + &r_t * shape_vel.rows(i * d, d)) * self.scale + &self.drift;
            p.rows_mut(i * d, d).copy_from(&pi);
            v.rows_mut(i * d, d).copy_from(&vi);
        }
        DesiredState { p, v }
    }
}

impl Motion for DesiredMotion {
    fn dim(&self) -> usize {
        self.d
    }

    fn agent_count(&self) -> usize {
        self.p0.len() / self.d
    }

    /// Fails with [`Error::DegenerateDesired`] when any two agents come closer
    /// than the separation floor.
    fn state(&self, t: f64) -> Result<DesiredState> {
        let state = self.eval_unchecked(t);
        let d = self.d;
        let n = self.agent_count();
        for i in 0..n {
            for j in i + 1..n {
                let distance = (state.p.rows(j * d, d) - state.p.rows(i * d, d)).norm();
                if distance < self.floor {
                    return Err(Error::DegenerateDesired { t, i, j, distance });
                }
            }
        }
        Ok(state)
    }

    fn period(&self) -> Option<f64> {
        match (&self.rotation, &self.deformation) {
            (Rotation::Planar { omega, .. }, _) if *omega != 0.0 => Some(TAU / omega.abs()),
            (_, Some(def)) if def.freq != 0.0 => Some(TAU / def.freq.abs()),
            _ => None,
        }
    }
}

/// Outcome of [`check_similarity_validity`].
#[derive(Debug, Clone)]
pub struct SimilarityReport {
    pub samples: usize,
    /// Largest `‖R(t)ᵀR(t) - I‖` over the samples.
    pub max_orthogonality_error: f64,
    /// Largest `|det R(t) - 1|`.
    pub max_determinant_error: f64,
    /// Largest `‖g*_ij(t) - R(t)ᵀ g*_ij(0)‖` over all agent pairs.
    pub max_bearing_error: f64,
    pub min_pair_distance: f64,
    pub violations: Vec<String>,
}

impl SimilarityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tolerance used by [`check_similarity_validity`].
pub const SIMILARITY_TOL: f64 = 1e-9;

/// Samples `[0, horizon]` with step `dt` and checks that the rotation part is
/// a proper rotation, that bearings follow `R(t)ᵀ g(0)`, and that no two
/// agents come closer than the separation floor.
pub fn check_similarity_validity(motion: &DesiredMotion, horizon: f64, dt: f64) -> SimilarityReport {
    let d = motion.d;
    let n = motion.agent_count();
    let steps = (horizon / dt).ceil().max(0.0) as usize;
    let initial = motion.eval_unchecked(0.0);
    let mut report = SimilarityReport {
        samples: steps + 1,
        max_orthogonality_error: 0.0,
        max_determinant_error: 0.0,
        max_bearing_error: 0.0,
        min_pair_distance: f64::INFINITY,
        violations: Vec::new(),
    };
    let ident = DMatrix::<f64>::identity(d, d);
    let mut first_violation = [None::<f64>; 4];
    for k in 0..=steps {
        let t = (k as f64 * dt).min(horizon);
        let r = motion.rotation.matrix(d, t);
        let orth = (r.transpose() * &r - &ident).norm();
        let det = (r.determinant() - 1.0).abs();
        let state = motion.eval_unchecked(t);
        let mut bearing_err: f64 = 0.0;
        let mut min_dist = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let now = state.p.rows(j * d, d) - state.p.rows(i * d, d);
                let then = initial.p.rows(j * d, d) - initial.p.rows(i * d, d);
                let dist = now.norm();
                min_dist = min_dist.min(dist);
                if dist > 0.0 && then.norm() > 0.0 {
                    let predicted = r.transpose() * (&then / then.norm());
                    bearing_err = bearing_err.max((now / dist - predicted).norm());
                }
            }
        }
        report.max_orthogonality_error = report.max_orthogonality_error.max(orth);
        report.max_determinant_error = report.max_determinant_error.max(det);
        report.max_bearing_error = report.max_bearing_error.max(bearing_err);
        report.min_pair_distance = report.min_pair_distance.min(min_dist);
        let failed = [
            orth > SIMILARITY_TOL,
            det > SIMILARITY_TOL,
            bearing_err > SIMILARITY_TOL,
            min_dist < motion.floor,
        ];
        for (slot, hit) in first_violation.iter_mut().zip(failed) {
            if hit && slot.is_none() {
                *slot = Some(t);
            }
        }
    }
    let labels = [
        "R(t) is not orthogonal",
        "det R(t) differs from 1",
        "bearings do not follow R(t)ᵀ g(0)",
        "agents closer than the separation floor",
    ];
    for (label, first) in labels.iter().zip(first_violation) {
        if let Some(t) = first {
            report.violations.push(format!("{label} (first at t = {t})"));
        }
    }
    report
}
