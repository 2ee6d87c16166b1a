//! Plane-stress solid mechanics with a ductile damage model that tracks
//! recoverable crack opening.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: symmetric 2D tensors, spectral decomposition and the
//!   plane-stress elastic operator;
//! - [`material`]: the constitutive kernel (yield surface, return mapping,
//!   damage, crack formation/closure, numeric tangent);
//! - [`path`]: piecewise-linear histories;
//! - [`oracle`]: a closed-form uniaxial reference solution and
//!   strain-driven material-point drivers;
//! - [`fem`]: meshes, elements, the displacement-controlled Newton solver
//!   and field output;
//! - [`scenario`]: benchmark geometry generators, load protocols and the
//!   scenario document format.

pub mod fem;
pub mod fmt;
pub mod material;
pub mod oracle;
pub mod path;
pub mod scenario;
pub mod tensor;
