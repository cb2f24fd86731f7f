//! Core library for the expected-booking (xB) toolkit: open-data
//! ingestion, pitch geometry, match-state replay, action valuation,
//! feature assembly, in-repo learners, and fouling-efficiency
//! analytics.

pub mod analytics;
pub mod context;
pub mod dataset;
pub mod geometry;
pub mod learn;
pub mod scalar;
pub mod statsbomb;
pub mod synth;
pub mod vaep;

pub use scalar::Scalar;

/// Default scalar for the pipeline. The numeric modules are generic
/// over [`Scalar`], so f32 works too; f64 is what the binaries use.
pub type Real = f64;
