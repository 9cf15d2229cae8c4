//! Fixed-length task encoders and the Renyi-type measures that govern them.
//!
//! Logs are base 2 everywhere.

pub mod cost;
pub mod encoder;
pub mod error;
pub mod lossy;
pub mod measures;
pub mod oracle;
pub mod partition;
pub mod prob;
pub mod selftest;
pub mod types;
pub mod universal;

pub use error::{Error, Result};
