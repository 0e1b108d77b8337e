use crate::error::{Error, Result};
use crate::raster::{Footprint, HeightMap};

/// Exact k-nearest search over the known (`> 0`) pixels of a grid by
/// scanning square rings outward from the query. Candidates are ordered by
/// squared pixel distance, then by row-major index.
pub(crate) struct KnownGrid<'a> {
    width: usize,
    height: usize,
    data: &'a [f64],
}

impl<'a> KnownGrid<'a> {
    pub(crate) fn new(z: &'a HeightMap) -> Result<Self> {
        if z.nonzero_count() == 0 {
            return Err(Error::NoData);
        }
        Ok(Self {
            width: z.width(),
            height: z.height(),
            data: z.data(),
        })
    }

    pub(crate) fn nearest(&self, row: usize, col: usize, k: usize, out: &mut Vec<(usize, usize)>) {
        out.clear();
        let (r0, c0) = (row as isize, col as isize);
        let (h, w) = (self.height as isize, self.width as isize);
        let visit = |r: isize, c: isize, out: &mut Vec<(usize, usize)>| {
            if r < 0 || c < 0 || r >= h || c >= w {
                return;
            }
            let idx = (r * w + c) as usize;
            if self.data[idx] > 0.0 {
                let d2 = ((r - r0) * (r - r0) + (c - c0) * (c - c0)) as usize;
                out.push((d2, idx));
            }
        };
        for ring in 0..=self.width.max(self.height) as isize {
            if ring == 0 {
                visit(r0, c0, out);
            } else {
                for c in c0 - ring..=c0 + ring {
                    visit(r0 - ring, c, out);
                    visit(r0 + ring, c, out);
                }
                for r in r0 - ring + 1..r0 + ring {
                    visit(r, c0 - ring, out);
                    visit(r, c0 + ring, out);
                }
            }
            if out.len() >= k {
                out.sort_unstable();
                out.truncate(k);
                // Anything unscanned lies at distance >= ring + 1.
                let limit = ((ring + 1) * (ring + 1)) as usize;
                if out[k - 1].0 < limit {
                    return;
                }
            }
        }
        out.sort_unstable();
        out.truncate(k);
    }
}

fn fill_missing(
    z: &HeightMap,
    m: &Footprint,
    mut value: impl FnMut(usize, usize) -> f64,
) -> Result<HeightMap> {
    z.ensure_same_dims(m.dims())?;
    let mut out = z.clone();
    let w = z.width();
    for idx in m.indices() {
        if z.data()[idx] == 0.0 {
            out.data_mut()[idx] = value(idx / w, idx % w);
        }
    }
    Ok(out)
}

/// Fills each missing footprint pixel with its nearest known pixel.
pub fn inpaint_nearest(z: &HeightMap, m: &Footprint) -> Result<HeightMap> {
    let grid = KnownGrid::new(z)?;
    let mut buf = Vec::new();
    fill_missing(z, m, |row, col| {
        grid.nearest(row, col, 1, &mut buf);
        z.data()[buf[0].1]
    })
}

/// Shepard interpolation over the `neighbors` nearest known pixels with
/// weights `d^-power`.
pub fn inpaint_idw(z: &HeightMap, m: &Footprint, power: f64, neighbors: usize) -> Result<HeightMap> {
    if neighbors == 0 || !(power.is_finite() && power >= 0.0) {
        return Err(Error::InvalidValue(format!(
            "IDW needs neighbors >= 1 and power >= 0, got {neighbors} / {power}"
        )));
    }
    let grid = KnownGrid::new(z)?;
    let mut buf = Vec::new();
    fill_missing(z, m, |row, col| {
        grid.nearest(row, col, neighbors, &mut buf);
        idw_value(&buf, z.data(), power)
    })
}

fn idw_value(candidates: &[(usize, usize)], data: &[f64], power: f64) -> f64 {
    if candidates[0].0 == 0 {
        return data[candidates[0].1];
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(d2, idx) in candidates {
        let w = (d2 as f64).powf(-power / 2.0);
        num += w * data[idx];
        den += w;
    }
    num / den
}
