//! Log-concave density estimation: the maximum likelihood estimator, the adversarial
//! families behind minimax lower bounds, envelope checks and seeded risk experiments.

pub mod density;
pub mod envelopes;
pub mod error;
pub mod families;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod mle;
pub mod numeric;
pub mod rng;

pub use error::{Error, Result};

/// Version tag written into every result file.
pub const SCHEMA_VERSION: u32 = 1;
