//! Offline handwritten signature verification.
//!
//! A signature image is normalized to a 256×512 binary raster, cut into three
//! horizontal bands from its black-pixel row profile and described per band
//! by wavelet statistics and ink counts. Each enrolled writer owns a planar
//! model: one small perceptron per band plus a principal perceptron that
//! combines the band scores with global shape attributes.

pub mod datasets;
pub mod error;
pub mod planar;
pub mod raster;
pub mod seed;
pub mod segmenter;
pub mod evaluate;
pub mod features;
pub mod mlp;
pub mod wavelet;

pub use error::{Error, Result};
