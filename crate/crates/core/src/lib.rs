//! Finite-strain incompressible viscoelastodynamics with energy-momentum
//! consistent time integration.

pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod integrators;
pub mod kinematics;
pub mod materials;
pub mod solver;
pub mod tensors;

pub use error::{Error, Result};
