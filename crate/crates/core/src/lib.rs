//! Discrete deformation theory of minimal Lagrangian surfaces with boundary
//! confined to a codimension-two symplectic scaffold in flat C^n.
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix the double-precision types every tool and test uses.

pub mod ambient;
pub mod dec;
pub mod deform;
pub mod error;
pub mod flow;
pub mod hodge;
pub mod linalg;
pub mod mesh;
pub mod scalar;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

pub type Patch = mesh::SimplicialPatch<f64>;
pub type Boundary = mesh::BoundaryData<f64>;
pub type Form = dec::Cochain<f64>;
pub type Operators = dec::DecOperators<f64>;
pub type Scaffold = ambient::Scaffold<f64>;
pub type State = deform::DeformationState<f64>;
pub type Field = deform::NormalField<f64>;
pub type Vector = nalgebra::DVector<f64>;
