//! Roof height-map repair toolkit.
//!
//! * [`raster`]: height maps, footprints, mesh rasterization, normalization, file formats.
//! * [`corruption`]: seeded synthesis of tree noise, sparsity, incompleteness and sensor noise.
//! * [`diffusion`]: footprint-masked conditional denoising diffusion (schedule, sampler, loss,
//!   trainable denoiser, checkpoints).
//! * [`baselines`]: nearest, linear, cubic spline, IDW and Perona-Malik inpainting.
//! * [`evaluation`]: MAE/RMSE in meters, footprint IoU, benchmark reports.
//! * [`dataset`]: manifests, procedural toy roofs and run configuration.

pub mod baselines;
pub mod corruption;
pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod evaluation;
pub mod raster;
pub mod rng;

pub use error::{Error, Result};
