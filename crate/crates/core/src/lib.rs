//! Exact Hodge integrals over double ramification cycles and strata of
//! differentials, the hierarchy Hamiltonians they assemble into, and the
//! identities relating them.

pub mod checks;
pub mod cycles;
pub mod error;
pub mod exactnum;
pub mod hierarchy;
pub mod linalg;
pub mod polynomials;
pub mod series;
pub mod socle;

pub use error::{Error, Result};
