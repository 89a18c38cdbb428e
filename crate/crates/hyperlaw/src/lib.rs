//! Numerical analysis of 2x2 hyperbolic conservation laws with a convex entropy:
//! constitutive sets, admissibility conditions, shock curves, entropy level sets,
//! and T_N configurations.

pub mod algebra;
pub mod characteristics;
pub mod error;
pub mod hypotheses;
pub mod level_sets;
pub mod reports;
pub mod rng;
pub mod shock;
pub mod systems;
pub mod tn;
pub mod tolerances;
pub mod transform;

pub use error::{Error, Result};
