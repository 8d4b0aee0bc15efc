//! Multiphoton interferometry with tritter and quarter multiport splitters.

pub mod classical;
pub mod cli;
pub mod devices;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod fringes;
pub mod multiparameter;
pub mod permanent;

pub use error::{Error, Result};
