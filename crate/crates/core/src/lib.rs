pub mod census;
pub mod complex;
pub mod cusp;
pub mod develop;
pub mod error;
pub mod fixtures;
pub mod minkowski;
pub mod rng;
pub mod simplex;
pub mod volume;

pub use error::{Error, Result};
