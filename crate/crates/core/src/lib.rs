//! Context-dependent voter model on graphs.
//!
//! Two opinions, an acceptance matrix `(alpha01, alpha10)` and a choice of
//! schedule (asynchronous, synchronous, or the lazy synchronous variant).
//! The crate provides
//!
//! - [`graph`]: immutable topologies and an edge-list reader,
//! - [`dynamics`]: the update rule and the step/run operations,
//! - [`chain`]: exact results (birth-death chains, closed forms, the
//!   full-configuration oracle, lazy random walks),
//! - [`montecarlo`]: trial harness, confidence intervals and the
//!   statistical checks that compare simulation against the exact results.

pub mod chain;
pub mod dynamics;
mod error;
pub mod graph;
pub mod linalg;
pub mod montecarlo;

pub use error::{Error, Result};
pub use graph::Graph;
