//! Discontinuous Galerkin discretization of the Tricomi problem
//! `y u_xx + u_yy = f` on a mixed elliptic-hyperbolic domain, tested with a
//! Morawetz multiplier `M v = b v_x + c v_y`.

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod morawetz;
pub mod norms;
pub mod problem;
pub mod spaces;
pub mod quadrature;
pub mod solver;
pub mod taylor;

pub use error::{Error, Result};
