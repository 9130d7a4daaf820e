//! Code smell detection for Java sources.
//!
//! The crate parses Java into a structural model, computes method and class
//! complexity metrics, turns `@CodeSmell` annotations into labeled samples,
//! calibrates one binary logistic regression model per smell and applies the
//! calibrated models to report likely smells.

mod fsutil;
pub mod source_model;
pub mod detector;
pub mod metrics;
pub mod sample;
pub mod smell;
pub mod stats;
pub mod store;
pub mod sync;
pub mod synth;
pub mod tagging;
