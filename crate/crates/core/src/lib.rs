//! Phased-elimination linear bandits that learn a global model from
//! privatized, partially observed distributed feedback.
//!
//! The crate provides:
//!
//! - [`design`]: near-G-optimal experiment designs over finite action sets
//!   and their integer pull allocations;
//! - [`privatizer`]: the `(randomizer, shuffler, analyzer)` privacy
//!   pipeline with central-Gaussian, local-Gaussian, and bit-level shuffle
//!   instantiations, plus the scalar sum protocol;
//! - [`population`]: a synthetic client population with heterogeneous
//!   local parameters around a global one;
//! - [`engine`]: the phased-elimination learners for distributed feedback
//!   and for standard linear bandits;
//! - [`accounting`]: regret and communication-cost bookkeeping with a CSV
//!   schema;
//! - [`harness`]: seeded replicate experiments, sweeps, and the presets
//!   behind the CLI.

pub mod accounting;
pub mod design;
pub mod engine;
pub mod error;
pub mod harness;
pub mod population;
pub mod privatizer;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use rng::SimRng;

/// Library version string surfaced by the CLI and the C API.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
