//! Plane-stress finite elements: meshes, linear elements, a banded direct
//! solver, and a displacement-controlled Newton driver with transactional
//! material-state commits.

pub mod band;
pub mod element;
pub mod mesh;
pub mod output;
pub mod solve;

pub use mesh::{ElementConn, Mesh, MeshError};
pub use solve::{
    run_history, DirichletHistory, FemError, ProbeDef, ProbeKind, QuadStore, ReactionDef,
    RunOutput, SolverConfig, StepContext, StepRecord,
};
