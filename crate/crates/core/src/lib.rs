//! Corruption robustness benchmarking for image retrieval and person
//! re-identification.
//!
//! The crate synthesizes corrupted query/gallery splits deterministically,
//! scores externally produced embeddings with mAP, CMC-k and mINP, and
//! provides the augmentation operators and loss kernels used by robust
//! training baselines.

pub mod augment;
pub mod corruption;
pub mod error;
pub mod fixtures;
pub mod image;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod protocol;
pub mod raster;
pub mod rng;

pub use crate::error::{Error, Result};
pub use crate::image::Image;

/// Toolkit version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
