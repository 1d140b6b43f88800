//! Finite-element solver for coupled free flow and poroelasticity.
//!
//! The poroelastic region is written in two pseudo-pressures so that the
//! displacement and Darcy sub-problems stay well posed in the incompressible
//! limit. Fluid and porous regions are joined by Nitsche interface terms, and
//! time stepping solves three smaller systems per step instead of one.

pub mod error;
pub mod fem;
pub mod format;
pub mod mesh;
pub mod model;
pub mod parallel;
pub mod scenario;
pub mod assembly;
pub mod timestepping;
pub mod verification;
pub mod cli;

pub use error::{Error, Result, SolverError};
