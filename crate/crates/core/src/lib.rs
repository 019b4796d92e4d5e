//! Algebraic multigrid preconditioned GMRES with a learned
//! strong-threshold selector.
//!
//! The crate builds classical AMG hierarchies (strength of connection,
//! PMIS coarsening, direct interpolation, Galerkin coarse operators) and
//! drives them either as a stationary solver or as a right preconditioner
//! for restarted GMRES. The strong threshold `theta` that controls
//! coarsening can be fixed, found by grid search, or predicted from the
//! matrix itself by a small graph network trained on grid-search labels.
//!
//! - [`sparse`]: CSR matrices, row-scale diagnostics, entry dropping.
//! - [`mm`]: Matrix Market I/O.
//! - [`problems`]: multiscale diffusion and coupled-field generators.
//! - [`amg`]: hierarchy setup, V-cycle, two-grid convergence estimates.
//! - [`krylov`]: restarted GMRES with right preconditioning.
//! - [`oracle`]: theta grid search and sensitivity experiments.
//! - [`gnn`]: node features, edge weights, message-passing network.
//! - [`mlp`]: the small dense networks used by [`gnn`] and [`model`].
//! - [`model`]: theta prediction, training, model serialization.
//! - [`manifest`]: dataset manifests shared with the command-line tool.
//! - [`rng`]: portable seeded random number generation.
//! - [`linalg`]: dense LU for coarsest-level solves.

pub mod error;
pub mod krylov;
pub mod linalg;
pub mod gnn;
pub mod manifest;
pub mod mlp;
pub mod mm;
pub mod model;
pub mod oracle;
pub mod amg;
pub mod problems;
pub mod rng;
pub mod sparse;
mod vecops;

pub use error::{Error, Result};
