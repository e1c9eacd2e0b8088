//! Numerical toolkit for the Hashimoto transform between the 1D
//! Landau–Lifshitz–Gilbert equation and a generalized nonlocal heat
//! equation, including the stochastic (Stratonovich) construction of weak
//! SLLG solutions from solutions of the stochastic heat equation.

pub mod error;
pub mod field;
pub mod hashimoto;
pub mod heat;
pub mod initial;
pub mod llg;
pub mod rotation;
pub mod seed;
pub mod stochastic;
pub mod validation;

pub use error::{Error, Result};
pub use field::{Domain, Grid1D, SphereField, Vec3};
pub use num_complex::Complex64;
