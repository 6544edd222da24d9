//! Geometry-aware force surrogate for partially submerged ground vehicles.
//!
//! The crate covers the full path from a watertight hull mesh to real-time
//! per-surface force predictions: surface decomposition and sampling, a
//! signed distance field, submergence features, synthetic campaign
//! generation, a shared-weight per-surface MLP with physics-informed loss
//! terms, trial-based physical validation, and a latency benchmark.

pub mod bench;
pub mod dataset;
pub mod defaults;
pub mod error;
pub mod features;
pub mod geometry;
pub mod model;
pub mod pipeline;
pub mod prepare;
pub mod sdf;
pub mod seeding;
pub mod validation;

pub use error::{Error, ErrorClass, Result};
