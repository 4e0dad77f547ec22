pub mod chaos;
pub mod cli;
pub mod cumulants;
pub mod error;
pub mod gauss;
pub mod graphs;
pub mod harness;
pub mod kernel;
pub mod partitions;
pub mod sampler;
pub mod special;
pub mod sphere;
pub mod stats;
pub mod theory;
pub mod zonal;

pub use error::{Error, Result};
