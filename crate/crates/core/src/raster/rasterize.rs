use serde::{Deserialize, Serialize};

use super::{HeightMap, Mask, TriangleMesh};
use crate::error::{Error, Result};

/// Raster dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub width: usize,
    pub height: usize,
}

impl GridSize {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn square(side: usize) -> Self {
        Self::new(side, side)
    }
}

// Tolerance on barycentric coordinates so pixel centers lying exactly on a
// shared edge are claimed by both neighbours.
const EDGE_EPS: f64 = 1e-9;
const MIN_AREA2: f64 = 1e-12;

/// Samples the mesh at every pixel center. A pixel takes the highest
/// interpolated height among the triangles covering its center; uncovered
/// pixels stay 0.
pub fn rasterize(mesh: &TriangleMesh, pixel_size: f64, grid: GridSize) -> Result<HeightMap> {
    if !(pixel_size.is_finite() && pixel_size > 0.0) {
        return Err(Error::InvalidValue(format!(
            "pixel size must be positive, got {pixel_size}"
        )));
    }
    let mut out = HeightMap::zeros(grid.width, grid.height, pixel_size);
    let mut drawn = 0usize;
    for tri in 0..mesh.triangles.len() {
        if mesh.projected_area2(tri).abs() <= MIN_AREA2 {
            continue;
        }
        drawn += 1;
        let corners = mesh.corners(tri);
        for_each_covered_pixel(corners, pixel_size, grid, |idx, z| {
            let cell = &mut out.data_mut()[idx];
            let z = z.max(0.0);
            if z > *cell {
                *cell = z;
            }
        });
    }
    if drawn == 0 {
        return Err(Error::EmptyMesh);
    }
    Ok(out)
}

/// Visits every pixel whose center falls inside the triangle's xy
/// projection, passing the linear index and the interpolated height.
pub(crate) fn for_each_covered_pixel(
    [a, b, c]: [[f64; 3]; 3],
    pixel_size: f64,
    grid: GridSize,
    mut visit: impl FnMut(usize, f64),
) {
    let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if area2.abs() <= MIN_AREA2 {
        return;
    }
    let to_px = |v: f64| v / pixel_size - 0.5;
    let min_x = to_px(a[0].min(b[0]).min(c[0])).ceil().max(0.0);
    let max_x = to_px(a[0].max(b[0]).max(c[0])).floor();
    let min_y = to_px(a[1].min(b[1]).min(c[1])).ceil().max(0.0);
    let max_y = to_px(a[1].max(b[1]).max(c[1])).floor();
    if max_x < 0.0 || max_y < 0.0 {
        return;
    }
    let max_x = (max_x as usize).min(grid.width.saturating_sub(1));
    let max_y = (max_y as usize).min(grid.height.saturating_sub(1));
    for row in min_y as usize..=max_y {
        let py = (row as f64 + 0.5) * pixel_size;
        for col in min_x as usize..=max_x {
            let px = (col as f64 + 0.5) * pixel_size;
            let w_a = ((b[0] - px) * (c[1] - py) - (c[0] - px) * (b[1] - py)) / area2;
            let w_b = ((c[0] - px) * (a[1] - py) - (a[0] - px) * (c[1] - py)) / area2;
            let w_c = 1.0 - w_a - w_b;
            if w_a >= -EDGE_EPS && w_b >= -EDGE_EPS && w_c >= -EDGE_EPS {
                visit(row * grid.width + col, interpolate([a, b, c], [w_a, w_b, w_c]));
            }
        }
    }
}

// Offset form keeps flat triangles exactly flat; centers on an edge use
// only that edge's endpoints, so level edges such as ridges stay exact.
fn interpolate(v: [[f64; 3]; 3], w: [f64; 3]) -> f64 {
    if let Some(k) = (0..3).find(|&k| w[k].abs() <= EDGE_EPS) {
        let (p, q) = (v[(k + 1) % 3], v[(k + 2) % 3]);
        let (wp, wq) = (w[(k + 1) % 3], w[(k + 2) % 3]);
        let t = wq / (wp + wq);
        return p[2] + t * (q[2] - p[2]);
    }
    v[0][2] + w[1] * (v[1][2] - v[0][2]) + w[2] * (v[2][2] - v[0][2])
}

/// Footprint inferred from the heights: set exactly where `z > 0`.
pub fn infer_footprint(z: &HeightMap) -> Mask {
    Mask::new(
        z.width(),
        z.height(),
        z.data().iter().map(|v| *v > 0.0).collect(),
    )
    .expect("dims from height map")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_quad(mesh: &mut TriangleMesh, x0: f64, y0: f64, x1: f64, y1: f64, z: f64) {
        mesh.push_quad([x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]);
    }

    #[test]
    fn covering_triangle_gives_uniform_map() {
        let mut mesh = TriangleMesh::default();
        mesh.push_triangle([-10.0, -10.0, 3.0], [30.0, -10.0, 3.0], [-10.0, 30.0, 3.0]);
        let z = rasterize(&mesh, 1.0, GridSize::square(8)).unwrap();
        assert!(z.data().iter().all(|v| *v == 3.0));
    }

    #[test]
    fn overlap_takes_maximum() {
        let mut mesh = TriangleMesh::default();
        flat_quad(&mut mesh, 0.0, 0.0, 6.0, 6.0, 2.0);
        flat_quad(&mut mesh, 3.0, 3.0, 8.0, 8.0, 5.0);
        let z = rasterize(&mesh, 1.0, GridSize::square(8)).unwrap();
        assert_eq!(z.get(1, 1), 2.0);
        assert_eq!(z.get(4, 4), 5.0);
        assert_eq!(z.get(7, 7), 5.0);
        assert_eq!(z.get(7, 0), 0.0);
    }

    #[test]
    fn slanted_plane_matches_closed_form() {
        let n = 10;
        let ps = 0.1;
        let mut mesh = TriangleMesh::default();
        let e = n as f64 * ps;
        mesh.push_quad([0.0, 0.0, 0.0], [e, 0.0, e], [e, e, e], [0.0, e, 0.0]);
        let z = rasterize(&mesh, ps, GridSize::square(n)).unwrap();
        for row in 0..n {
            for col in 0..n {
                let x = (col as f64 + 0.5) * ps;
                assert!((z.get(row, col) - x).abs() < 1e-6, "({row},{col})");
            }
        }
    }

    #[test]
    fn degenerate_mesh_is_empty() {
        let mut mesh = TriangleMesh::default();
        mesh.push_triangle([0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [2.0, 2.0, 1.0]);
        assert!(matches!(
            rasterize(&mesh, 1.0, GridSize::square(4)),
            Err(Error::EmptyMesh)
        ));
    }

    #[test]
    fn footprint_counts_nonzero_pixels() {
        let mut data = vec![0.0; 25];
        for i in [0, 3, 7, 8, 12, 19, 24] {
            data[i] = 1.5;
        }
        let z = HeightMap::new(5, 5, 1.0, data).unwrap();
        assert_eq!(infer_footprint(&z).count(), 7);
        assert!(infer_footprint(&HeightMap::zeros(3, 3, 1.0)).is_empty());
    }
}
