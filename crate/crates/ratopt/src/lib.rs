//! Certified global lower bounds — and, when rank conditions hold, certified
//! global minimizers — for sums of rational functions over basic
//! semialgebraic sets, via hierarchies of semidefinite moment relaxations.

pub mod error;
pub mod gmp;
pub mod polyalg;
pub mod relax;
pub mod sdpcore;

pub use error::{Error, Result};
