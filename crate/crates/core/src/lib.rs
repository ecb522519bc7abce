pub mod error;
pub mod extraction;
pub mod geo;
pub mod econometrics;
pub mod geomask;
pub mod metrics;
pub mod multiverse;
pub mod chart;
pub mod synthgen;
pub mod num;
pub mod raster;

pub use error::{Error, ErrorClass, Result};
