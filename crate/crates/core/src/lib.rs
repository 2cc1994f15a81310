//! Bearing-only formation control driven by persistently exciting bearings.
//!
//! The crate covers the full chain from interaction graphs to closed-loop
//! runs:
//!
//! - [`graphs`]: oriented graphs, incidence matrices, graph Laplacians.
//! - [`geometry`]: projectors, bearings, the bearing Laplacian and its rank.
//! - [`trajectories`]: desired motions `p*(t)`, `v*(t)`.
//! - [`pe`]: windowed persistence-of-excitation tests and the structural
//!   rules relating edge excitation to excitation of the whole formation.
//! - [`estimation`]: the bearing-driven configuration observer.
//! - [`control`]: the distributed control law.
//! - [`simulation`]: RK4 integration and run logs.
//! - [`scenario`]: TOML scenario files, including the bundled ones.

pub mod control;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod graphs;
pub mod linalg;
pub mod pe;
pub mod scenario;
pub mod simulation;
pub mod trajectories;

pub use error::{Error, Result};
