use delaunator::{triangulate, Point};

use super::knn::KnownGrid;
use crate::error::Result;
use crate::raster::{for_each_covered_pixel, Footprint, GridSize, HeightMap, Mask};

/// Piecewise-linear interpolation over a Delaunay triangulation of the
/// known pixel centers. Pixels outside the convex hull, or every pixel when
/// the known samples are collinear, take the nearest known value.
pub fn inpaint_linear(z: &HeightMap, m: &Footprint) -> Result<HeightMap> {
    z.ensure_same_dims(m.dims())?;
    let (w, h) = z.dims();
    let targets = Mask::new(
        w,
        h,
        m.data()
            .iter()
            .zip(z.data())
            .map(|(inside, v)| *inside && *v == 0.0)
            .collect(),
    )?;
    linear_fill(z, &targets)
}

/// Fills exactly the `targets` pixels of `z`.
pub(crate) fn linear_fill(z: &HeightMap, targets: &Mask) -> Result<HeightMap> {
    let grid = KnownGrid::new(z)?;
    let (w, h) = z.dims();
    let known: Vec<usize> = (0..w * h).filter(|i| z.data()[*i] > 0.0).collect();
    let points: Vec<Point> = known
        .iter()
        .map(|i| Point {
            x: (i % w) as f64 + 0.5,
            y: (i / w) as f64 + 0.5,
        })
        .collect();
    let tri = triangulate(&points);
    if tri.is_empty() && known.len() >= 3 {
        log::warn!("known pixels are collinear; linear fill falls back to nearest");
    }
    let mut out = z.clone();
    let mut done = vec![false; w * h];
    for t in tri.triangles.chunks_exact(3) {
        let corner = |k: usize| {
            let p = &points[t[k]];
            [p.x, p.y, z.data()[known[t[k]]]]
        };
        for_each_covered_pixel([corner(0), corner(1), corner(2)], 1.0, GridSize::new(w, h), |idx, v| {
            if targets.data()[idx] && !done[idx] {
                done[idx] = true;
                out.data_mut()[idx] = v.max(0.0);
            }
        });
    }
    let mut buf = Vec::new();
    for idx in targets.indices() {
        if !done[idx] {
            grid.nearest(idx / w, idx % w, 1, &mut buf);
            out.data_mut()[idx] = z.data()[buf[0].1];
        }
    }
    Ok(out)
}
