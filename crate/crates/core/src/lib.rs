//! Core of the dose-degradation toolkit: CT volume model and I/O,
//! preprocessing, synthetic phantoms, parallel-beam projection, sinogram
//! noise models and image metrics.

pub mod degrade;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod preprocess;
pub mod projection;
pub mod rng;
pub mod volume;

pub use error::{Error, Result};
pub use image::Image2;
pub use volume::{CtVolume, Dims, Geometry, IntensityUnit, NoduleLabel, NoduleMask};
