use std::fs;
use std::path::Path;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CorruptionSpec;
use crate::error::{Error, Result};
use crate::raster::{read_rhm, write_rhm, Footprint, HeightMap};

/// Placement attempts per tree before it is dropped.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;

/// A canopy raster together with the transform applied before planting.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStamp {
    pub canopy: HeightMap,
    pub rotation_deg: f64,
    pub xy_scale: f64,
    pub z_scale: f64,
}

impl TreeStamp {
    /// Rotates the canopy about its center, resizes it by `xy_scale` and
    /// multiplies heights by `z_scale`. Bilinear resampling; the returned
    /// grid is `(values, width, height)` and is large enough for any angle.
    pub fn render(&self) -> (Vec<f64>, usize, usize) {
        let (cw, ch) = (self.canopy.width() as f64, self.canopy.height() as f64);
        let side = ((cw * cw + ch * ch).sqrt() * self.xy_scale).ceil().max(1.0) as usize;
        let (sin, cos) = self.rotation_deg.to_radians().sin_cos();
        let half = side as f64 / 2.0;
        let mut out = vec![0.0; side * side];
        for r in 0..side {
            for c in 0..side {
                let dx = (c as f64 + 0.5 - half) / self.xy_scale;
                let dy = (r as f64 + 0.5 - half) / self.xy_scale;
                // Inverse rotation back into canopy space.
                let sx = cos * dx + sin * dy + cw / 2.0;
                let sy = -sin * dx + cos * dy + ch / 2.0;
                out[r * side + c] = bilinear(&self.canopy, sx - 0.5, sy - 0.5) * self.z_scale;
            }
        }
        (out, side, side)
    }
}

fn bilinear(map: &HeightMap, x: f64, y: f64) -> f64 {
    let (w, h) = (map.width() as isize, map.height() as isize);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let sample = |xi: isize, yi: isize| {
        if xi < 0 || yi < 0 || xi >= w || yi >= h {
            0.0
        } else {
            map.get(yi as usize, xi as usize)
        }
    };
    let (xi, yi) = (x0 as isize, y0 as isize);
    let top = sample(xi, yi) * (1.0 - fx) + sample(xi + 1, yi) * fx;
    let bottom = sample(xi, yi + 1) * (1.0 - fx) + sample(xi + 1, yi + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Collection of canopy height maps.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLibrary {
    pub canopies: Vec<HeightMap>,
}

impl TreeLibrary {
    /// Radially decaying canopies with a rough crown, diameters in
    /// `[min_px, max_px]` and peak heights between 1 and 3 m.
    pub fn procedural<R: Rng + ?Sized>(
        count: usize,
        min_px: usize,
        max_px: usize,
        rng: &mut R,
    ) -> Self {
        assert!(min_px >= 2 && min_px <= max_px, "canopy size range");
        let canopies = (0..count)
            .map(|_| {
                let side = rng.random_range(min_px..=max_px);
                let radius = side as f64 / 2.0;
                let peak = rng.random_range(1.0..3.0);
                let lobes = rng.random_range(3..7) as f64;
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let data = (0..side * side)
                    .map(|k| {
                        let dy = (k / side) as f64 + 0.5 - radius;
                        let dx = (k % side) as f64 + 0.5 - radius;
                        let rho = (dx * dx + dy * dy).sqrt();
                        let edge = radius * (0.85 + 0.15 * (lobes * dy.atan2(dx) + phase).cos());
                        if rho >= edge {
                            0.0
                        } else {
                            let t = rho / edge;
                            let crown = 1.0 + 0.15 * (rng.random::<f64>() - 0.5);
                            peak * (1.0 - t * t).sqrt() * crown
                        }
                    })
                    .collect();
                HeightMap::new(side, side, 1.0, data).expect("canopy heights are valid")
            })
            .collect();
        Self { canopies }
    }

    /// The procedural library used when no canopy directory is given:
    /// 32 canopies of 8 to 32 px.
    pub fn standard(seed: u64) -> Self {
        Self::procedural(32, 8, 32, &mut crate::rng::child_rng(seed, "tree-library"))
    }

    /// Loads every `*.rhm` file in `dir`, sorted by file name.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "rhm"))
            .collect();
        paths.sort();
        let canopies = paths.iter().map(read_rhm).collect::<Result<Vec<_>>>()?;
        if canopies.is_empty() {
            return Err(Error::InvalidValue(format!(
                "no .rhm canopies in {}",
                dir.display()
            )));
        }
        Ok(Self { canopies })
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (k, canopy) in self.canopies.iter().enumerate() {
            write_rhm(dir.join(format!("tree_{k:04}.rhm")), canopy)?;
        }
        Ok(())
    }
}

/// Record of one planted tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreePlacement {
    pub canopy_index: usize,
    /// Center `(row, col)`; always a pixel outside the footprint.
    pub center: (usize, usize),
    pub rotation_deg: f64,
    pub xy_scale: f64,
    pub z_scale: f64,
    /// Footprint pixels whose height the tree raised.
    pub replaced: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone)]
pub struct TreeOutcome {
    pub map: HeightMap,
    pub placements: Vec<TreePlacement>,
    /// Trees dropped after exhausting their placement attempts.
    pub skipped: usize,
}

fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Plants `U{tree_count_min..=tree_count_max}` trees around the roof.
///
/// Each tree draws a canopy, a rotation in `[0, 360)`, a coverage scale and
/// a height scale, then is centred on a random pixel outside the footprint
/// and merged by per-pixel maximum. A placement is accepted only when it
/// raises at least one footprint pixel; after
/// [`MAX_PLACEMENT_ATTEMPTS`] misses the tree is skipped.
pub fn inject_trees<R: Rng + ?Sized>(
    z_gt: &HeightMap,
    m: &Footprint,
    library: &TreeLibrary,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Result<TreeOutcome> {
    z_gt.ensure_same_dims(m.dims())?;
    if library.canopies.is_empty() {
        return Err(Error::InvalidValue("tree library is empty".into()));
    }
    let count = rng.random_range(spec.tree_count_min..=spec.tree_count_max);
    let mut map = z_gt.clone();
    let mut placements = Vec::with_capacity(count);
    let mut skipped = 0;
    if count == 0 {
        return Ok(TreeOutcome {
            map,
            placements,
            skipped,
        });
    }
    let outside: Vec<usize> = m.complement().indices().collect();
    if outside.is_empty() {
        return Err(Error::CannotPlaceTree);
    }
    let (w, h) = z_gt.dims();
    for _ in 0..count {
        let canopy_index = rng.random_range(0..library.canopies.len());
        let stamp = TreeStamp {
            canopy: library.canopies[canopy_index].clone(),
            rotation_deg: uniform(0.0, 360.0, rng),
            xy_scale: uniform(spec.tree_xy_scale_min, spec.tree_xy_scale_max, rng),
            z_scale: uniform(spec.tree_z_scale_min, spec.tree_z_scale_max, rng),
        };
        let (tree, tw, th) = stamp.render();
        let mut accepted = None;
        for attempt in 1..=MAX_PLACEMENT_ATTEMPTS {
            let idx = outside[rng.random_range(0..outside.len())];
            let (ci, cj) = (idx / w, idx % w);
            let replaced = count_replaced(&map, m, &tree, tw, th, ci, cj);
            if replaced > 0 {
                accepted = Some((ci, cj, replaced, attempt));
                break;
            }
        }
        match accepted {
            Some((ci, cj, replaced, attempts)) => {
                merge_max(&mut map, &tree, tw, th, ci, cj);
                placements.push(TreePlacement {
                    canopy_index,
                    center: (ci, cj),
                    rotation_deg: stamp.rotation_deg,
                    xy_scale: stamp.xy_scale,
                    z_scale: stamp.z_scale,
                    replaced,
                    attempts,
                });
            }
            None => {
                warn!(
                    "tree {canopy_index} never occluded the roof in {MAX_PLACEMENT_ATTEMPTS} \
                     placements on a {w}x{h} map; skipped"
                );
                skipped += 1;
            }
        }
    }
    Ok(TreeOutcome {
        map,
        placements,
        skipped,
    })
}

/// Visits stamp pixels that land on the image when centred at `(ci, cj)`.
fn for_each_overlap(
    (w, h): (usize, usize),
    (tw, th): (usize, usize),
    (ci, cj): (usize, usize),
    mut visit: impl FnMut(usize, usize),
) {
    let top = ci as isize - (th / 2) as isize;
    let left = cj as isize - (tw / 2) as isize;
    for r in 0..th {
        let y = top + r as isize;
        if y < 0 || y >= h as isize {
            continue;
        }
        for c in 0..tw {
            let x = left + c as isize;
            if x < 0 || x >= w as isize {
                continue;
            }
            visit(y as usize * w + x as usize, r * tw + c);
        }
    }
}

fn count_replaced(
    map: &HeightMap,
    m: &Footprint,
    tree: &[f64],
    tw: usize,
    th: usize,
    ci: usize,
    cj: usize,
) -> usize {
    let mut replaced = 0;
    for_each_overlap(map.dims(), (tw, th), (ci, cj), |img, stamp| {
        if m.data()[img] && tree[stamp] > map.data()[img] {
            replaced += 1;
        }
    });
    replaced
}

fn merge_max(map: &mut HeightMap, tree: &[f64], tw: usize, th: usize, ci: usize, cj: usize) {
    let dims = map.dims();
    let data = map.data_mut();
    for_each_overlap(dims, (tw, th), (ci, cj), |img, stamp| {
        if tree[stamp] > data[img] {
            data[img] = tree[stamp];
        }
    });
}
