//! Classical void-filling references. Every method treats `z > 0` as
//! known, fills exactly the footprint pixels that are 0, and returns known
//! pixels unchanged. Distances are measured in pixels.

mod knn;
mod linear;
mod pm;
mod spline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Footprint, HeightMap};

pub use knn::{inpaint_idw, inpaint_nearest};
pub use linear::inpaint_linear;
pub use pm::{inpaint_pm_diffusion, pm_diffuse, Conductance, PmParams};
pub use spline::{inpaint_spline, keys_kernel, KEYS_A};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nearest,
    Linear,
    Spline,
    Idw,
    #[serde(rename = "pmdiff")]
    PmDiffusion,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Linear,
        Method::Nearest,
        Method::Spline,
        Method::Idw,
        Method::PmDiffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nearest => "nearest",
            Method::Linear => "linear",
            Method::Spline => "spline",
            Method::Idw => "idw",
            Method::PmDiffusion => "pmdiff",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown baseline method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    pub idw_power: f64,
    pub idw_neighbors: usize,
    pub pm: PmParams,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            idw_power: 2.0,
            idw_neighbors: 16,
            pm: PmParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InpaintRequest<'a> {
    /// Observed heights, 0 where missing.
    pub z: &'a HeightMap,
    /// Region to fill.
    pub m: &'a Footprint,
    pub method: Method,
    pub params: BaselineParams,
}

pub fn inpaint(req: &InpaintRequest<'_>) -> Result<HeightMap> {
    let InpaintRequest { z, m, method, params } = *req;
    match method {
        Method::Nearest => inpaint_nearest(z, m),
        Method::Linear => inpaint_linear(z, m),
        Method::Spline => inpaint_spline(z, m),
        Method::Idw => inpaint_idw(z, m, params.idw_power, params.idw_neighbors),
        Method::PmDiffusion => pm_diffuse(
            z,
            m,
            params.pm,
            Conductance::PeronaMalik { k: params.pm.k },
            &mut |_, _| {},
        ),
    }
}
