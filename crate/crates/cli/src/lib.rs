//! Command-line front end: scenario loading, the `simulate`, `observe` and
//! `analyze` commands, CSV logs and SVG plots.

pub mod commands;
pub mod csv;
pub mod svg;
