//! Privacy risk evaluation for synthetic tabular data.
//!
//! The crate scores a synthetic dataset against the real data it was
//! generated from with two families of metrics:
//!
//! * [`dcr`]: distance to closest record, comparing synthetic-to-real
//!   distances with real-to-holdout distances and normalizing the result to a
//!   privacy score.
//! * [`attacks`]: predicate-based singling-out attacks whose success on the
//!   training set is compared with their success on a control set.
//!
//! Both can run in the raw (standardized, one-hot) space or in an embedding
//! space learned by the contrastive encoder in [`embedder`]. The [`harness`]
//! module reproduces the leaky-dataset and overfit-generator protocols.

pub mod attacks;
pub mod dcr;
pub mod embedder;
pub mod error;
pub mod harness;
pub mod neighbors;
pub mod seed;
pub mod tabular;

pub use error::{Error, Result};

/// Version string embedded in every report.
pub const VERSION: &str = concat!("tabpriv ", env!("CARGO_PKG_VERSION"));
