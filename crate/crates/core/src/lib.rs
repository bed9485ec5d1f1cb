//! Solvers for deterministic mean field games with local coupling on the flat torus.
//!
//! The crate discretizes the pair of convex problems in duality (optimal
//! control of a Hamilton-Jacobi equation and its dual in `(m, w)`), solves
//! them with a primal-dual proximal iteration, and checks the recovered
//! weak solutions.

pub mod analysis;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod model;
pub mod solver;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{MfgError, Result};
pub use functionals::{DualState, ErgodicState, PrimalState};
pub use grid::{Grid, Placement, ScalarField, TimeSampling, VectorField};
pub use model::{AssumptionReport, Coupling, Hamiltonian, ModelSpec};
pub use solver::{ErgodicSolution, GapRecord, SolutionBundle, SolverOptions};
