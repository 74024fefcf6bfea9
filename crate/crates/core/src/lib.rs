//! Skin-tone and perceived-demographic auditing for face images.
//!
//! The pipeline per image: illumination normalization, a landmark-driven
//! skin mask, a k-means representative tone in CIELAB, and nearest-swatch
//! classification on the Monk, PERLA and Fitzpatrick scales. Corpus-level
//! statistics and report tables are built from the resulting records.

pub mod color;
pub mod digest;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod mask;
pub mod normalize;
pub mod pipeline;
pub mod raster;
pub mod record;
pub mod report;
pub mod scales;
pub mod sidecar;
pub mod stats;
pub mod tone;

pub use color::{DeltaMetric, Lab, Rgb8};
pub use error::{Error, Result};
pub use raster::ImageBuffer;
