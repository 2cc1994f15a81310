//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! [graph]
//! n = 4
//! edges = [[1, 2], [2, 3], [3, 4]]     # 1-based, undirected
//!
//! [motion]
//! p_star_0 = [[0, 1], [1, 0], [0, -1], [-1, 0]]
//! omega = 0.5235987755982988           # rad/s
//! rotation_plane = [1, 2]              # 1-based axes
//! center = [0, 0]                      # a point, or an agent index
//! drift = [0.1, 0]
//!
//! [initial]
//! p0 = [[1, 1], [-1, 2], [1, -1], [-1, -2]]
//!
//! [control]
//! k_p = 1.0
//!
//! [run]
//! horizon = 100.0
//! dt = 0.01
//! ```
//!
//! Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Deserialize;

use crate::control::ControlParams;
use crate::estimation::{random_estimate, DEFAULT_ESTIMATE_SPREAD};
use crate::geometry::DEFAULT_SEPARATION_FLOOR;
use crate::graphs::OrientedGraph;
use crate::linalg;
use crate::pe::{PeSettings, DEFAULT_MU_FLOOR, MIN_STEPS_PER_WINDOW};
use crate::simulation::DEFAULT_DT;
use crate::trajectories::{Center, Deformation, DesiredMotion, Motion, Rotation};

/// Largest step accepted in a scenario.
pub const MAX_DT: f64 = 0.05;

pub const SQUARE_2D: &str = include_str!("../../../scenarios/square2d.toml");
pub const PYRAMID_3D: &str = include_str!("../../../scenarios/pyramid3d.toml");
pub const STATIC_SQUARE: &str = include_str!("../../../scenarios/static_square.toml");
pub const TRIANGLE_ONE_PE: &str = include_str!("../../../scenarios/triangle_one_pe.toml");
pub const SKEW_CYCLE_ONE_PE: &str = include_str!("../../../scenarios/skew_cycle_one_pe.toml");

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    Io {
        path: PathBuf,
        message: String,
    },
    /// Syntax errors and unknown or missing keys, with the parser's location.
    Parse(String),
    /// Well-formed but inconsistent content.
    Invalid {
        field: String,
        message: String,
    },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            ScenarioError::Parse(msg) => write!(f, "parse error: {msg}"),
            ScenarioError::Invalid { field, message } => write!(f, "invalid `{field}`: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn invalid(field: &str, message: impl fmt::Display) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub graph: GraphSection,
    pub motion: MotionSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub control: ControlSection,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CenterSpec {
    Agent(usize),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationSection {
    pub freq: f64,
    pub sin_amp: Option<Vec<Vec<f64>>>,
    pub cos_amp: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSection {
    pub p_star_0: Vec<Vec<f64>>,
    #[serde(default)]
    pub omega: f64,
    pub rotation_plane: Option<[usize; 2]>,
    pub center: Option<CenterSpec>,
    pub drift: Option<Vec<f64>>,
    pub scale: Option<f64>,
    pub deformation: Option<DeformationSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub p0: Option<Vec<Vec<f64>>>,
    pub p_hat_0: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
    pub spread: Option<f64>,
    /// Require `Uᵀ(p(0) - p*(0)) = 0` at load time.
    #[serde(default)]
    pub require_matching_centroid: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub k_p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    pub dt: Option<f64>,
    pub window: Option<f64>,
    pub mu_floor: Option<f64>,
    pub separation_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub k_p: Option<f64>,
    pub window: Option<f64>,
    pub seed: Option<u64>,
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub graph: OrientedGraph,
    pub motion: DesiredMotion,
    pub p0: DVector<f64>,
    pub p_hat0: DVector<f64>,
    pub params: ControlParams,
    pub horizon: f64,
    pub dt: f64,
    pub window: Option<f64>,
    pub mu_floor: f64,
    pub seed: u64,
    pub separation_floor: f64,
    pub output: OutputSection,
}

fn stack(field: &str, rows: &[Vec<f64>], n: usize, d: usize) -> Result<DVector<f64>, ScenarioError> {
    if rows.len() != n {
        return Err(invalid(field, format!("expected {n} points, got {}", rows.len())));
    }
    let mut out = Vec::with_capacity(n * d);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(invalid(
                field,
                format!("point {} has {} coordinates, expected {d}", i + 1, r.len()),
            ));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(invalid(field, format!("point {} is not finite", i + 1)));
        }
        out.extend_from_slice(r);
    }
    Ok(DVector::from_vec(out))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn build(self, overrides: &Overrides) -> Result<Scenario, ScenarioError> {
        let n = self.graph.n;
        let graph = OrientedGraph::from_one_based_pairs(n, &self.graph.edges).map_err(|e| invalid("graph.edges", e))?;
        let d = self.motion.p_star_0.first().map_or(0, Vec::len);
        if d < 2 {
            return Err(invalid("motion.p_star_0", "points need at least 2 coordinates"));
        }
        let p_star0 = stack("motion.p_star_0", &self.motion.p_star_0, n, d)?;

        let mut motion = DesiredMotion::new(d, p_star0.clone()).map_err(|e| invalid("motion.p_star_0", e))?;
        let omega = self.motion.omega;
        if !omega.is_finite() {
            return Err(invalid("motion.omega", "must be finite"));
        }
        if omega != 0.0 || self.motion.rotation_plane.is_some() {
            let [a, b] = self.motion.rotation_plane.unwrap_or([1, 2]);
            if a == 0 || b == 0 {
                return Err(invalid("motion.rotation_plane", "axes are 1-based"));
            }
            motion = motion
                .with_rotation(Rotation::Planar {
                    axes: (a - 1, b - 1),
                    omega,
                })
                .map_err(|e| invalid("motion.rotation_plane", e))?;
        }
        if let Some(center) = self.motion.center {
            let center = match center {
                CenterSpec::Agent(0) => return Err(invalid("motion.center", "agent indices are 1-based")),
                CenterSpec::Agent(i) => Center::Agent(i - 1),
                CenterSpec::Point(c) => Center::Point(DVector::from_vec(c)),
            };
            motion = motion.with_center(center).map_err(|e| invalid("motion.center", e))?;
        }
        if let Some(drift) = self.motion.drift {
            motion = motion
                .with_drift(DVector::from_vec(drift))
                .map_err(|e| invalid("motion.drift", e))?;
        }
        if let Some(scale) = self.motion.scale {
            motion = motion.with_scale(scale).map_err(|e| invalid("motion.scale", e))?;
        }
        if let Some(def) = self.motion.deformation {
            let amp = |field: &str, rows: Option<Vec<Vec<f64>>>| match rows {
                Some(r) => stack(field, &r, n, d),
                None => Ok(DVector::zeros(n * d)),
            };
            let deformation = Deformation {
                freq: def.freq,
                sin_amp: amp("motion.deformation.sin_amp", def.sin_amp)?,
                cos_amp: amp("motion.deformation.cos_amp", def.cos_amp)?,
            };
            motion = motion
                .with_deformation(deformation)
                .map_err(|e| invalid("motion.deformation", e))?;
        }

        let separation_floor = self.run.separation_floor.unwrap_or(DEFAULT_SEPARATION_FLOOR);
        if separation_floor.is_nan() || separation_floor <= 0.0 {
            return Err(invalid("run.separation_floor", "must be positive"));
        }
        motion = motion.with_separation_floor(separation_floor);

        let seed = overrides.seed.or(self.initial.seed).unwrap_or(0);
        let spread = self.initial.spread.unwrap_or(DEFAULT_ESTIMATE_SPREAD);
        let p0 = match &self.initial.p0 {
            Some(rows) => stack("initial.p0", rows, n, d)?,
            None => random_estimate(n * d, seed.wrapping_add(1), spread),
        };
        let p_hat0 = match &self.initial.p_hat_0 {
            Some(rows) => stack("initial.p_hat_0", rows, n, d)?,
            None => random_estimate(n * d, seed, DEFAULT_ESTIMATE_SPREAD),
        };
        if self.initial.require_matching_centroid {
            let gap = linalg::block_mean(&(&p0 - &p_star0), d).norm();
            if gap > 1e-12 {
                return Err(invalid(
                    "initial.require_matching_centroid",
                    format!("initial centroid differs from the desired one by {gap:e}"),
                ));
            }
        }

        let k_p = overrides.k_p.unwrap_or(self.control.k_p);
        let params = ControlParams::new(k_p).map_err(|e| invalid("control.k_p", e))?;

        let horizon = overrides.horizon.unwrap_or(self.run.horizon);
        let dt = overrides.dt.or(self.run.dt).unwrap_or(DEFAULT_DT);
        let window = overrides.window.or(self.run.window);
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(invalid("run.dt", format!("must lie in (0, {MAX_DT}], got {dt}")));
        }
        if !(horizon == 0.0 || horizon >= dt) || !horizon.is_finite() {
            return Err(invalid(
                "run.horizon",
                format!("must be 0 or at least dt, got {horizon}"),
            ));
        }
        if let Some(w) = window {
            if w.is_nan() || w <= 0.0 {
                return Err(invalid("run.window", "must be positive"));
            }
            if dt > w / MIN_STEPS_PER_WINDOW {
                return Err(invalid(
                    "run.dt",
                    format!("must not exceed window/50 = {}", w / MIN_STEPS_PER_WINDOW),
                ));
            }
        }
        let mu_floor = self.run.mu_floor.unwrap_or(DEFAULT_MU_FLOOR);

        Ok(Scenario {
            name: self.name.unwrap_or_else(|| "scenario".to_string()),
            graph,
            motion,
            p0,
            p_hat0,
            params,
            horizon,
            dt,
            window,
            mu_floor,
            seed,
            separation_floor,
            output: self.output,
        })
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self, ScenarioError> {
        ScenarioFile::parse(text)?.build(overrides)
    }

    /// Loads `path`, or `path.toml` when `path` has no extension and does not
    /// exist. The scenario name defaults to the file stem.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ScenarioError> {
        let resolved = if !path.exists() && path.extension().is_none() {
            path.with_extension("toml")
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&resolved).map_err(|e| ScenarioError::Io {
            path: resolved.clone(),
            message: e.to_string(),
        })?;
        let mut file = ScenarioFile::parse(&text).map_err(|e| match e {
            ScenarioError::Parse(msg) => ScenarioError::Parse(format!("{}: {msg}", resolved.display())),
            other => other,
        })?;
        if file.name.is_none() {
            file.name = resolved.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        file.build(overrides)
    }

    pub fn dim(&self) -> usize {
        self.motion.dim()
    }

    /// Window length for the excitation tests: the declared one, else one
    /// period of the motion, else a quarter of the horizon.
    pub fn analysis_window(&self) -> f64 {
        self.window
            .or_else(|| self.motion.period())
            .unwrap_or(self.horizon / 4.0)
    }

    pub fn pe_settings(&self) -> PeSettings {
        let window = self.analysis_window();
        PeSettings {
            window,
            horizon: self.horizon,
            dt: self.dt.min(window / MIN_STEPS_PER_WINDOW),
            mu_floor: self.mu_floor,
        }
    }

    /// Desired configuration at `t = 0`.
    pub fn p_star0(&self) -> DVector<f64> {
        self.motion.initial().clone()
    }
}
