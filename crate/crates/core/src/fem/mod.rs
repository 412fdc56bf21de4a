//! Taylor-Hood `Q2/Q1` hexahedral discretization.

pub mod assembly;
pub mod basis;
pub mod loads;
pub mod mesh;
pub mod space;

pub use assembly::{FemProblem, FieldState, QpKinematics, QpStates, Residuals, SparsePattern};
pub use loads::{BodyForce, DirichletBc, LoadSpec, TimeFn, Traction};
pub use mesh::{generate_box_mesh, generate_lblock_mesh, HexMesh, LBlockDims, LBlockDivisions};
pub use space::{QpGeom, TaylorHoodSpace};
