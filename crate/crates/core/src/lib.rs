//! Operator fractional Lévy motion: matrix functions, kernels, covariances,
//! simulation, time-reversibility checks and scaling limits.

pub mod covariance;
pub mod error;
pub mod kernels;
pub mod levy;
pub mod limits;
pub mod matfun;
pub mod mcstats;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod timerev;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
