use serde::{Deserialize, Serialize};

use super::{HeightMap, Mask};
use crate::error::{Error, Result};

/// Default roof height span mapped onto `[-1, 1]`, in meters.
pub const DEFAULT_RANGE_CAP: f64 = 10.0;

/// Everything needed to move between meters and normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    /// Lowest nonzero height of the source map.
    pub z_min: f64,
    /// Highest height of the source map.
    pub z_max: f64,
    pub range_cap: f64,
    /// Factor applied to `z - z_min` when the span exceeds `range_cap`, else 1.
    pub extra_scale: f64,
}

impl NormParams {
    pub fn from_map(z: &HeightMap, range_cap: f64) -> Result<Self> {
        if !(range_cap.is_finite() && range_cap > 0.0) {
            return Err(Error::InvalidValue(format!(
                "range cap must be positive, got {range_cap}"
            )));
        }
        let (z_min, z_max) = z
            .data()
            .iter()
            .filter(|v| **v > 0.0)
            .fold(None, |acc: Option<(f64, f64)>, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
            .ok_or(Error::NoRoofData)?;
        let span = z_max - z_min;
        let extra_scale = if span > range_cap {
            range_cap / span
        } else {
            1.0
        };
        Ok(Self {
            z_min,
            z_max,
            range_cap,
            extra_scale,
        })
    }

    fn center(&self) -> f64 {
        let scaled_max = self.z_min + (self.z_max - self.z_min) * self.extra_scale;
        0.5 * (self.z_min + scaled_max)
    }

    pub fn to_normalized(&self, meters: f64) -> f64 {
        let scaled = self.z_min + (meters - self.z_min) * self.extra_scale;
        2.0 / self.range_cap * (scaled - self.center())
    }

    /// Inverse of [`NormParams::to_normalized`]; negative results clamp to 0.
    pub fn to_meters(&self, normalized: f64) -> f64 {
        let scaled = normalized * 0.5 * self.range_cap + self.center();
        let meters = self.z_min + (scaled - self.z_min) / self.extra_scale;
        meters.max(0.0)
    }

    /// Converts a height difference in meters to normalized units.
    pub fn scale_to_normalized(&self) -> f64 {
        2.0 * self.extra_scale / self.range_cap
    }
}

/// Roof-focused normalized raster. Pixels flagged in `missing` carry no
/// height; their `data` entry is 0 and never goes through the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMap {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
    pub data: Vec<f64>,
    pub missing: Mask,
    pub params: NormParams,
}

impl NormalizedMap {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn z_min(&self) -> f64 {
        self.params.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.params.z_max
    }

    pub fn range_cap(&self) -> f64 {
        self.params.range_cap
    }

    pub fn extra_scale(&self) -> f64 {
        self.params.extra_scale
    }

    /// Conditioning grid: normalized values with missing pixels at 0.
    pub fn conditioning(&self) -> Vec<f64> {
        self.data
            .iter()
            .zip(self.missing.data())
            .map(|(v, m)| if *m { 0.0 } else { *v })
            .collect()
    }

    /// Number of pixels carrying a height.
    pub fn known_count(&self) -> usize {
        self.missing.data().iter().filter(|m| !**m).count()
    }
}

/// Maps the nonzero pixels of `z` into `[-1, 1]` around the roof's own
/// height range; spans above `range_cap` are first compressed about `z_min`.
pub fn normalize(z: &HeightMap, range_cap: f64) -> Result<NormalizedMap> {
    let params = NormParams::from_map(z, range_cap)?;
    Ok(normalize_with(z, params))
}

/// Normalizes `z` with externally supplied parameters, e.g. those of the
/// corrupted observation when preparing its ground truth.
pub fn normalize_with(z: &HeightMap, params: NormParams) -> NormalizedMap {
    let mut data = Vec::with_capacity(z.data().len());
    let mut missing = Vec::with_capacity(z.data().len());
    for &v in z.data() {
        if v > 0.0 {
            data.push(params.to_normalized(v));
            missing.push(false);
        } else {
            data.push(0.0);
            missing.push(true);
        }
    }
    NormalizedMap {
        width: z.width(),
        height: z.height(),
        pixel_size: z.pixel_size(),
        data,
        missing: Mask::new(z.width(), z.height(), missing).expect("dims from height map"),
        params,
    }
}

pub fn denormalize(x: &NormalizedMap) -> HeightMap {
    let data = x
        .data
        .iter()
        .zip(x.missing.data())
        .map(|(v, m)| if *m { 0.0 } else { x.params.to_meters(*v) })
        .collect();
    HeightMap::new(x.width, x.height, x.pixel_size, data).expect("denormalized heights are valid")
}
