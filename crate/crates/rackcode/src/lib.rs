//! Rack-aware erasure coding with low-bandwidth, error-resilient repair.

pub mod array;
pub mod files;
pub mod gf;
pub mod repair;
pub mod rs;
pub mod sim;
