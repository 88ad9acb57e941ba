//! Potential theory for the Dunkl Laplacian on the annulus
//! `A = { x in R^d : rho < |x| < 1 }` for sign-group reflection groups.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dunkl;
pub mod error;
pub mod field;
pub mod green;
pub mod harmonics;
pub mod intertwining;
pub mod kernels;
pub mod quadrature;
pub mod roots;
pub mod solvers;
pub mod special;
pub mod system;

pub use dunkl::{LaplacianStencil, TestBump};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use roots::{DunklConstants, RootSystem, RootSystemKind};
pub use system::DunklSystem;
