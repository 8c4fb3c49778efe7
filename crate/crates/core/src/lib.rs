//! Numerical laboratory for the octonion-valued KdV equation and its
//! Gardner and Miura companions.

pub mod algebra;
pub mod config;
pub mod error;
pub mod flows;
pub mod grid;
pub mod hamiltonian;
pub mod initial;
pub mod runner;
pub mod symmetry;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
