//! Finite-model laboratory for minimal and nearly-minimal measure expansion.
//!
//! Groups are finite models on dense indices `0..N`, sets are bitmasks, and
//! every measure is an exact rational with denominator dividing `N`.

pub mod error;
pub mod expansion;
pub mod group;
pub mod hom;
pub mod inverse1d;
pub mod io;
pub mod plant;
pub mod pseudometric;
pub mod quotient;
pub mod rational;
pub mod subset;
pub mod suites;
pub mod sumset;

/// Exact rational used for every measure and distance.
pub type Q = num_rational::Ratio<i64>;

pub use error::{Error, Result};
pub use group::{Arc, Character, GroupModel, Subgroup};
pub use subset::Subset;
pub use sumset::Side;
