use serde::{Deserialize, Serialize};

use super::knn::KnownGrid;
use crate::error::{Error, Result};
use crate::raster::{Footprint, HeightMap, NormParams, DEFAULT_RANGE_CAP};

/// Edge conductance as a function of the neighbour difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conductance {
    /// `exp(-(d / k)^2)`.
    PeronaMalik { k: f64 },
    /// Plain heat flow (`g = 1`).
    Constant,
}

impl Conductance {
    fn eval(self, d: f64) -> f64 {
        match self {
            Conductance::PeronaMalik { k } => (-(d / k).powi(2)).exp(),
            Conductance::Constant => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmParams {
    /// Edge threshold in normalized height units.
    pub k: f64,
    pub dt: f64,
    pub iterations: usize,
    /// Stop once the largest per-pixel update falls below this.
    pub tolerance: f64,
}

impl Default for PmParams {
    fn default() -> Self {
        Self {
            k: 0.3,
            dt: 0.2,
            iterations: 500,
            tolerance: 1e-5,
        }
    }
}

/// Perona-Malik inpainting: missing footprint pixels start from their
/// nearest known value and evolve under nonlinear diffusion while known
/// pixels stay fixed. Heights are diffused in normalized units.
pub fn inpaint_pm_diffusion(
    z: &HeightMap,
    m: &Footprint,
    k: f64,
    iterations: usize,
    dt: f64,
) -> Result<HeightMap> {
    let params = PmParams {
        k,
        iterations,
        dt,
        ..PmParams::default()
    };
    pm_diffuse(z, m, params, Conductance::PeronaMalik { k }, &mut |_, _| {})
}

/// General form with a selectable conductance. `observer` receives the
/// iteration number (from 1) and the normalized state after each update.
pub fn pm_diffuse(
    z: &HeightMap,
    m: &Footprint,
    params: PmParams,
    conductance: Conductance,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Result<HeightMap> {
    z.ensure_same_dims(m.dims())?;
    if !(params.dt > 0.0 && params.dt <= 0.25) {
        return Err(Error::InvalidValue(format!(
            "time step must lie in (0, 0.25], got {}",
            params.dt
        )));
    }
    if let Conductance::PeronaMalik { k } = conductance {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidValue(format!("edge threshold must be positive, got {k}")));
        }
    }
    let grid = KnownGrid::new(z)?;
    let norm = NormParams::from_map(z, DEFAULT_RANGE_CAP)?;
    let (w, h) = z.dims();
    let data = z.data();
    let domain: Vec<bool> = m.data().iter().zip(data).map(|(i, v)| *i || *v > 0.0).collect();
    let free: Vec<usize> = m.indices().filter(|i| data[*i] == 0.0).collect();

    let mut u: Vec<f64> = data.iter().map(|v| if *v > 0.0 { norm.to_normalized(*v) } else { 0.0 }).collect();
    let mut buf = Vec::new();
    for &idx in &free {
        grid.nearest(idx / w, idx % w, 1, &mut buf);
        u[idx] = u[buf[0].1];
    }

    let mut next = u.clone();
    for iter in 1..=params.iterations {
        let mut max_update: f64 = 0.0;
        for &idx in &free {
            let (r, c) = (idx / w, idx % w);
            let here = u[idx];
            let mut flux = 0.0;
            let mut visit = |nb: usize| {
                if domain[nb] {
                    let d = u[nb] - here;
                    flux += conductance.eval(d) * d;
                }
            };
            if r > 0 {
                visit(idx - w);
            }
            if r + 1 < h {
                visit(idx + w);
            }
            if c > 0 {
                visit(idx - 1);
            }
            if c + 1 < w {
                visit(idx + 1);
            }
            let delta = params.dt * flux;
            next[idx] = here + delta;
            max_update = max_update.max(delta.abs());
        }
        std::mem::swap(&mut u, &mut next);
        observer(iter, &u);
        if max_update < params.tolerance {
            break;
        }
    }

    let mut out = z.clone();
    for &idx in &free {
        out.data_mut()[idx] = norm.to_meters(u[idx]);
    }
    Ok(out)
}
