//! Fairness-aware expression classification toolkit.
//!
//! Three training approaches over a shared feature extractor — a plain
//! baseline, an attribute-aware head that consumes sensitive attributes,
//! and a disentangled multi-branch head trained adversarially to strip
//! sensitive information from the representation — plus subgroup
//! evaluation with an equal-opportunity fairness measure and a synthetic
//! biased-dataset generator for desk-scale verification.

pub mod augment;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod losses;
pub mod model;
pub mod nn;
pub mod records;
pub mod rng;
pub mod schema;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
