//! Raster containers, mesh rasterization, roof-focused normalization and
//! the on-disk formats shared by every other module.
//!
//! All grids are row-major: pixel `(row, col)` lives at `row * width + col`.
//! Pixel centers sit at world coordinates `((col + 0.5) * pixel_size,
//! (row + 0.5) * pixel_size)`.

mod io;
mod mesh;
mod normalize;
mod rasterize;

pub use io::{
    decode_rhm, decode_rhm_mask, encode_rhm, encode_rhm_mask, read_rhm, read_rhm_mask,
    read_sidecar, write_rhm, write_rhm_mask, write_sidecar, Sidecar, RHM_MAGIC,
};
pub use mesh::{parse_obj, write_obj, TriangleMesh};
pub use normalize::{
    denormalize, normalize, normalize_with, NormParams, NormalizedMap, DEFAULT_RANGE_CAP,
};
pub(crate) use rasterize::for_each_covered_pixel;
pub use rasterize::{infer_footprint, rasterize, GridSize};

use crate::error::{Error, Result};

/// Single-channel roof height raster in meters. Zero means missing or ground.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    width: usize,
    height: usize,
    pixel_size: f64,
    data: Vec<f64>,
}

impl HeightMap {
    pub fn new(width: usize, height: usize, pixel_size: f64, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidValue(format!(
                "raster must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidValue(format!(
                "{width}x{height} raster needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if !(pixel_size.is_finite() && pixel_size > 0.0) {
            return Err(Error::InvalidValue(format!(
                "pixel size must be positive, got {pixel_size}"
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidValue(format!(
                "heights must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixel_size,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, pixel_size: f64) -> Self {
        Self::new(width, height, pixel_size, vec![0.0; width * height])
            .expect("zero raster is always valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Overwrites one pixel. Negative or non-finite values are rejected.
    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "heights must be finite and non-negative, got {value}"
            )));
        }
        self.data[row * self.width + col] = value;
        Ok(())
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|v| **v > 0.0).count()
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other,
            });
        }
        Ok(())
    }
}

/// Binary raster. Used for building footprints (1 = roof pixel) and for
/// corruption masks (1 = pixel removed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

/// A footprint is a mask whose set pixels delineate the roof.
pub type Footprint = Mask;

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidValue(format!(
                "mask {width}x{height} with {} values",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height]).expect("valid dims")
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![true; width * height]).expect("valid dims")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub(crate) fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|b| *b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        self.ensure_same_dims(other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a && *b)
            .collect();
        Mask::new(self.width, self.height, data)
    }

    pub fn complement(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other,
            });
        }
        Ok(())
    }

    /// Errors with [`Error::EmptyFootprint`] when no pixel is set.
    pub fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyFootprint)
        } else {
            Ok(())
        }
    }
}
