use thiserror::Error;

/// Errors raised by graph construction, geometry, analysis and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has no spanning tree")]
    DisconnectedGraph,

    #[error("expected a unit vector, got norm {norm}")]
    NonUnitVector { norm: f64 },

    #[error("{} are {distance:e} apart, below the separation floor", agent_pair(.agents))]
    CoincidentAgents {
        agents: Option<(usize, usize)>,
        distance: f64,
    },

    #[error("desired agents {} and {} are {distance:e} apart at t = {t}", .i + 1, .j + 1)]
    DegenerateDesired { t: f64, i: usize, j: usize, distance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("horizon {horizon} is shorter than two windows of length {window}")]
    HorizonTooShort { horizon: f64, window: f64 },

    #[error("sample step {dt} is coarser than window/50 for window {window}")]
    StepTooCoarse { dt: f64, window: f64 },

    #[error("invalid edge count m = {m} for n = {n} agents")]
    InvalidCount { n: usize, m: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any [`Error::AtTime`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            other => other,
        }
    }
}

fn agent_pair(agents: &Option<(usize, usize)>) -> String {
    match agents {
        Some((i, j)) => format!("agents {} and {}", i + 1, j + 1),
        None => "points".to_string(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
