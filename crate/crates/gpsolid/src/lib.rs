//! Numerical laboratory for the nonlocal Gross-Pitaevskii equation at
//! positive density.
//!
//! The crate minimizes grand-canonical and canonical energies of
//! u ↦ ∫|∇u|² + ½∬ w(x−y)|u(x)|²|u(y)|² − μ∫|u|² on bounded uniform grids,
//! evaluates every closed-form bound on the critical chemical potential of
//! the fluid-solid transition, builds the thermodynamic functions f(μ), ρ(μ),
//! e(ρ), φ(ρ) from finite-volume sweeps, and solves the high-density
//! classical problem and the 2D vortex boundary-value problem.

pub mod criticality;
pub mod lattice;
pub mod numerics;
pub mod potential;
pub mod snapshot;
pub mod solver;

pub use criticality::{BoundValue, CriticalityReport, KGrid};
pub use lattice::{Boundary, Field, Grid, Scalar};
pub use potential::{Overrides, Potential, PotentialKind, Stability};
pub use solver::{MinimizationResult, MinimizeOptions, SeedStrategy};
