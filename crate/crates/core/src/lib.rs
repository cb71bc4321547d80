//! Weighted greedy approximation on finite windows of a Schauder basis.
//!
//! The crate evaluates sequence-space norms, runs the thresholding and
//! Chebyshev greedy algorithms, computes weighted best-approximation errors
//! by exhaustive search, and estimates greediness and democracy constants.

pub mod constants;
pub mod error;
pub mod greedy;
pub mod lab;
pub mod optim;
pub mod par;
pub mod spaces;
pub mod weights;

pub use error::{Error, Result};
pub use spaces::{CoefVec, NormModel, SignPattern, SpaceSpec};
pub use weights::{IndexSet, Weight};

/// Version stamped into every report.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
