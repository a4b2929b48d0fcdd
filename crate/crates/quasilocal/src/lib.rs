//! Finite-dimensional generalised probabilistic theories (GPTs) with
//! tomographic locality: systems, channels, fiducial frames, and
//! quasiprobabilistic decompositions.
//!
//! The library converts multipartite channels to (quasi)stochastic maps over
//! fiducial measurement outcomes and back, verifies non-signalling structure,
//! and decomposes non-signalling channels into affine combinations of product
//! local channels, reporting the negativity of the weights.
//!
//! Modules:
//! - [`numerics`]: dense matrices, affine/ℓ1 solvers, polyhedral cones.
//! - [`model`]: GPT systems and partitioned maps between them.
//! - [`duotensor`]: fiducial frames and the channel ↔ stochastic conversion.
//! - [`nonsignalling`]: marginal maps and non-signalling verification.
//! - [`decompose`]: decomposition into product local channels and negativity.
//! - [`theories`]: built-in classical, gbit and qubit theories.
//!
//! The `rayon` feature (enabled by default) parallelises the inner loops of
//! the solvers and decompositions; without it every code path runs
//! sequentially with identical results.

pub mod decompose;
pub mod duotensor;
mod error;
pub mod model;
pub mod nonsignalling;
pub mod numerics;
mod par;
pub mod theories;

pub use error::{Error, Result};
pub use model::{GptSystem, MapClass, PartitionedMap};

/// Tolerance for exact algebraic identities (frame validation, round trips).
pub const TOL_ALGEBRAIC: f64 = 1e-9;

/// Tolerance for LP-mediated comparisons (decomposition residuals, negativity).
pub const TOL_LP: f64 = 1e-7;

/// Pivot tolerance of the simplex solver.
pub const TOL_PIVOT: f64 = 1e-10;

/// Frames whose hopping metric has reciprocal condition number below this are
/// rejected as singular.
pub const RCOND_MIN: f64 = 1e-12;

/// Mixture weights with absolute value below this are dropped from outputs.
pub const DROP_TOL: f64 = 1e-12;

/// Cap on the number of enumerated deterministic strategies.
pub const STRATEGY_CAP: u64 = 1_000_000;
