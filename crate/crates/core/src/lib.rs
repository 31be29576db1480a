//! piblab: an exact, desk-scale laboratory for information-bottleneck
//! analysis of model training with train/validation/future splits.
//!
//! Everything is computed by enumeration on finite alphabets: worlds are
//! small generative processes, channels are explicit conditional tables,
//! and every information quantity, posterior, and variational bound is an
//! exact sum, so identities and inequalities can be tested at tight
//! tolerances.

pub mod bounds;
pub mod demo;
pub mod error;
pub mod estimators;
pub mod finite_info;
pub mod posterior;
pub mod solver;
pub mod world;

pub use error::{Error, Result};

/// Information quantities are measured in nats (natural logarithms).
pub type Nats = f64;
