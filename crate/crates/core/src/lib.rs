//! Extreme value statistics for generalized baker's maps.

pub mod error;
pub mod evt;
pub mod experiment;
pub mod geometry;
pub mod measure;
pub mod par;
pub mod pointprocess;
pub mod symbolic;
pub mod ulam;

pub use error::{Error, Result};
