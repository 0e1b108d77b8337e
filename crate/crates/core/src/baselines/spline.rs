use super::linear::linear_fill;
use crate::error::Result;
use crate::raster::{Footprint, HeightMap, Mask};

/// Cubic-convolution parameter.
pub const KEYS_A: f64 = -0.5;
/// Spacing of the coarse lattice the cubic surface is fitted through.
const STRIDE: usize = 2;

pub fn keys_kernel(s: f64) -> f64 {
    let a = KEYS_A;
    let s = s.abs();
    if s <= 1.0 {
        (a + 2.0) * s * s * s - (a + 3.0) * s * s + 1.0
    } else if s < 2.0 {
        a * s * s * s - 5.0 * a * s * s + 8.0 * a * s - 4.0 * a
    } else {
        0.0
    }
}

/// Fills missing footprint pixels with a cubic-convolution surface. The grid
/// is first completed by linear interpolation, sampled on a stride-2
/// lattice, and the missing pixels are re-evaluated from that lattice with
/// the Keys kernel, clipped to the observed height range. Known pixels are
/// returned unchanged.
pub fn inpaint_spline(z: &HeightMap, m: &Footprint) -> Result<HeightMap> {
    z.ensure_same_dims(m.dims())?;
    let (w, h) = z.dims();
    let all_missing = Mask::new(w, h, z.data().iter().map(|v| *v == 0.0).collect())?;
    let dense = linear_fill(z, &all_missing)?;
    let lattice = Lattice::sample(&dense);
    // Cubic overshoot is clipped to the observed height range.
    let known = z.data().iter().filter(|v| **v > 0.0);
    let lo = known.clone().cloned().fold(f64::INFINITY, f64::min);
    let hi = known.cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = z.clone();
    for idx in m.indices() {
        if z.data()[idx] == 0.0 {
            let (row, col) = (idx / w, idx % w);
            out.data_mut()[idx] = lattice
                .eval(row as f64 / STRIDE as f64, col as f64 / STRIDE as f64)
                .clamp(lo, hi);
        }
    }
    Ok(out)
}

// Lattice values padded by two nodes per side using Keys' boundary rule
// f[-1] = 3 f[0] - 3 f[1] + f[2], which keeps quadratics exact.
struct Lattice {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

const PAD: usize = 2;

fn extend(line: &[f64]) -> Vec<f64> {
    let n = line.len();
    let mut out = vec![0.0; n + 2 * PAD];
    out[PAD..PAD + n].copy_from_slice(line);
    for step in 1..=PAD {
        let lo = PAD - step;
        let hi = PAD + n - 1 + step;
        let (f, b) = match n {
            1 => (out[lo + 1], out[hi - 1]),
            2 => (
                2.0 * out[lo + 1] - out[lo + 2],
                2.0 * out[hi - 1] - out[hi - 2],
            ),
            _ => (
                3.0 * out[lo + 1] - 3.0 * out[lo + 2] + out[lo + 3],
                3.0 * out[hi - 1] - 3.0 * out[hi - 2] + out[hi - 3],
            ),
        };
        out[lo] = f;
        out[hi] = b;
    }
    out
}

impl Lattice {
    fn sample(dense: &HeightMap) -> Self {
        let (w, h) = dense.dims();
        let (nr, nc) = ((h - 1) / STRIDE + 1, (w - 1) / STRIDE + 1);
        let (pr, pc) = (nr + 2 * PAD, nc + 2 * PAD);
        let mut rows_ext = vec![0.0; nr * pc];
        for i in 0..nr {
            let line: Vec<f64> = (0..nc).map(|j| dense.get(i * STRIDE, j * STRIDE)).collect();
            rows_ext[i * pc..(i + 1) * pc].copy_from_slice(&extend(&line));
        }
        let mut values = vec![0.0; pr * pc];
        for j in 0..pc {
            let line: Vec<f64> = (0..nr).map(|i| rows_ext[i * pc + j]).collect();
            for (i, v) in extend(&line).into_iter().enumerate() {
                values[i * pc + j] = v;
            }
        }
        Self {
            rows: pr,
            cols: pc,
            values,
        }
    }

    /// Evaluates at fractional lattice coordinates (unpadded).
    fn eval(&self, y: f64, x: f64) -> f64 {
        let (iy, ix) = (y.floor() as isize, x.floor() as isize);
        let (fy, fx) = (y - iy as f64, x - ix as f64);
        let mut sum = 0.0;
        for dy in -1..=2isize {
            let wy = keys_kernel(fy - dy as f64);
            if wy == 0.0 {
                continue;
            }
            let r = (iy + dy + PAD as isize).clamp(0, self.rows as isize - 1) as usize;
            for dx in -1..=2isize {
                let wx = keys_kernel(fx - dx as f64);
                let c = (ix + dx + PAD as isize).clamp(0, self.cols as isize - 1) as usize;
                sum += wy * wx * self.values[r * self.cols + c];
            }
        }
        sum
    }
}
