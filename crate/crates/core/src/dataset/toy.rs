//! Procedural roofs with closed-form height functions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{infer_footprint, rasterize, Footprint, GridSize, HeightMap, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    Flat,
    Shed,
    Gable,
    Hip,
    GableDormer,
}

impl Archetype {
    pub const ALL: [Archetype; 5] = [
        Archetype::Flat,
        Archetype::Shed,
        Archetype::Gable,
        Archetype::Hip,
        Archetype::GableDormer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Flat => "flat",
            Archetype::Shed => "shed",
            Archetype::Gable => "gable",
            Archetype::Hip => "hip",
            Archetype::GableDormer => "gable-dormer",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown roof archetype `{s}`")))
    }
}

/// One building: a rectangle of `length` x `width` meters centered in the
/// grid, rotated by `rotation_deg` counter-clockwise (the ridge runs along
/// the length before rotation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoofSpec {
    pub archetype: Archetype,
    pub length: f64,
    pub width: f64,
    pub eave_height: f64,
    /// Highest point; equals `eave_height` for flat roofs.
    pub ridge_height: f64,
    pub rotation_deg: f64,
    pub pixel_size: f64,
    pub grid: GridSize,
}

// Dormer box on the +v slope as fractions of the roof size.
const DORMER_HALF_LENGTH: f64 = 0.125;
const DORMER_V_START: f64 = 0.125;
const DORMER_V_END: f64 = 0.4;

impl RoofSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.length) && positive(self.width) && positive(self.pixel_size)) {
            return Err(Error::InvalidValue(format!(
                "degenerate extents {} x {} m at {} m/px",
                self.length, self.width, self.pixel_size
            )));
        }
        if !(positive(self.eave_height) && self.ridge_height >= self.eave_height) {
            return Err(Error::InvalidValue(format!(
                "need 0 < eave ({}) <= ridge ({})",
                self.eave_height, self.ridge_height
            )));
        }
        if self.archetype == Archetype::Hip && self.length < self.width {
            return Err(Error::InvalidValue("hip roofs need length >= width".into()));
        }
        if self.grid.width == 0 || self.grid.height == 0 {
            return Err(Error::InvalidValue("empty grid".into()));
        }
        Ok(())
    }

    fn center(&self) -> (f64, f64) {
        (
            self.grid.width as f64 * self.pixel_size / 2.0,
            self.grid.height as f64 * self.pixel_size / 2.0,
        )
    }

    fn to_world(&self, u: f64, v: f64) -> (f64, f64) {
        let (cx, cy) = self.center();
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        (cx + c * u - s * v, cy + s * u + c * v)
    }

    fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (cx, cy) = self.center();
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let (dx, dy) = (x - cx, y - cy);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    fn slope(&self) -> f64 {
        let rise = self.ridge_height - self.eave_height;
        match self.archetype {
            Archetype::Flat => 0.0,
            Archetype::Shed => rise / self.width,
            _ => rise / (self.width / 2.0),
        }
    }

    /// Closed-form roof height at world position `(x, y)`, `None` outside
    /// the footprint.
    pub fn height_at(&self, x: f64, y: f64) -> Option<f64> {
        let (u, v) = self.to_local(x, y);
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        let tol = 1e-9;
        if u.abs() > hl + tol || v.abs() > hw + tol {
            return None;
        }
        let s = self.slope();
        let (eave, ridge) = (self.eave_height, self.ridge_height);
        let z = match self.archetype {
            Archetype::Flat => eave,
            Archetype::Shed => eave + s * (v + hw),
            Archetype::Gable => ridge - s * v.abs(),
            Archetype::Hip => ridge - s * v.abs().max(u.abs() - (hl - hw)),
            Archetype::GableDormer => {
                let roof = ridge - s * v.abs();
                let in_dormer = u.abs() <= DORMER_HALF_LENGTH * self.length + tol
                    && v >= DORMER_V_START * self.width - tol
                    && v <= DORMER_V_END * self.width + tol;
                if in_dormer {
                    roof.max(ridge - s * DORMER_V_START * self.width)
                } else {
                    roof
                }
            }
        };
        Some(z.max(eave))
    }

    pub fn mesh(&self) -> TriangleMesh {
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        let (eave, ridge) = (self.eave_height, self.ridge_height);
        let p = |u: f64, v: f64, z: f64| {
            let (x, y) = self.to_world(u, v);
            [x, y, z]
        };
        let mut mesh = TriangleMesh::default();
        match self.archetype {
            Archetype::Flat => {
                mesh.push_quad(p(-hl, -hw, eave), p(hl, -hw, eave), p(hl, hw, eave), p(-hl, hw, eave))
            }
            Archetype::Shed => {
                mesh.push_quad(p(-hl, -hw, eave), p(hl, -hw, eave), p(hl, hw, ridge), p(-hl, hw, ridge))
            }
            Archetype::Gable | Archetype::GableDormer => {
                mesh.push_quad(p(-hl, -hw, eave), p(hl, -hw, eave), p(hl, 0.0, ridge), p(-hl, 0.0, ridge));
                mesh.push_quad(p(-hl, 0.0, ridge), p(hl, 0.0, ridge), p(hl, hw, eave), p(-hl, hw, eave));
                if self.archetype == Archetype::GableDormer {
                    let du = DORMER_HALF_LENGTH * self.length;
                    let (v0, v1) = (DORMER_V_START * self.width, DORMER_V_END * self.width);
                    let top = ridge - self.slope() * v0;
                    mesh.push_quad(p(-du, v0, top), p(du, v0, top), p(du, v1, top), p(-du, v1, top));
                }
            }
            Archetype::Hip => {
                let r = hl - hw;
                mesh.push_quad(p(-hl, -hw, eave), p(hl, -hw, eave), p(r, 0.0, ridge), p(-r, 0.0, ridge));
                mesh.push_quad(p(-r, 0.0, ridge), p(r, 0.0, ridge), p(hl, hw, eave), p(-hl, hw, eave));
                mesh.push_triangle(p(hl, -hw, eave), p(hl, hw, eave), p(r, 0.0, ridge));
                mesh.push_triangle(p(-hl, hw, eave), p(-hl, -hw, eave), p(-r, 0.0, ridge));
            }
        }
        mesh
    }

    /// Draws a random building of the given archetype that fits inside the
    /// grid with a margin of one pixel at any rotation.
    pub fn random<R: Rng + ?Sized>(
        archetype: Archetype,
        grid: GridSize,
        pixel_size: f64,
        rng: &mut R,
    ) -> Self {
        let extent = grid.width.min(grid.height) as f64 * pixel_size;
        let max_diag = extent - 2.0 * pixel_size;
        loop {
            let a = rng.random_range(0.45..0.8) * extent;
            let b = rng.random_range(0.35..0.7) * extent;
            if (a * a + b * b).sqrt() > max_diag {
                continue;
            }
            let (length, width) = (a.max(b), a.min(b));
            let eave = rng.random_range(3.0..8.0);
            let rise = if archetype == Archetype::Flat {
                0.0
            } else {
                rng.random_range(1.5..4.0)
            };
            return Self {
                archetype,
                length,
                width,
                eave_height: eave,
                ridge_height: eave + rise,
                rotation_deg: rng.random_range(0.0..360.0),
                pixel_size,
                grid,
            };
        }
    }
}

/// Mesh, raster and footprint of one procedural roof.
pub fn gen_toy_roof(spec: &RoofSpec) -> Result<(TriangleMesh, HeightMap, Footprint)> {
    spec.validate()?;
    let mesh = spec.mesh();
    let z = rasterize(&mesh, spec.pixel_size, spec.grid)?;
    let m = infer_footprint(&z);
    Ok((mesh, z, m))
}
