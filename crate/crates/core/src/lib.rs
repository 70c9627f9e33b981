//! Structure-preserving time stepping for a coupled Schrödinger–Maxwell
//! system on a periodic grid.
#![no_std]

extern crate alloc;

pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod integrators;
pub mod operators;
pub mod scenarios;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use grid::{Axis, Grid3D, ScalarField, SystemState, VectorField, Wavefunction};
pub use hamiltonian::{AtomSpec, DiscreteHamiltonian, PhysicsConstants, PotentialField};
pub use integrators::{Integrator, StepPlan};
pub use solver::SolverConfig;
