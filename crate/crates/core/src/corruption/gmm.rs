//! Gaussian-mixture incompleteness masks.
//!
//! Coordinates are `(row, col)` in pixels, 0-based. A mask pixel set to 1
//! marks a height that gets removed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CorruptionSpec;
use crate::error::{Error, Result};
use crate::raster::{Footprint, Mask};

/// One unnormalized, axis-aligned Gaussian bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussComponent {
    /// Mean `(row, col)` in pixels.
    pub mu: (f64, f64),
    /// Standard deviation `(row, col)` in pixels.
    pub sigma: (f64, f64),
}

impl GaussComponent {
    pub fn new(mu: (f64, f64), sigma: (f64, f64)) -> Self {
        debug_assert!(sigma.0 >= 0.0 && sigma.1 >= 0.0);
        Self { mu, sigma }
    }

    /// Peak-normalized density at pixel `(i, j)`; 1 at the mean. A zero
    /// sigma on an axis collapses that axis to the mean's pixel.
    pub fn density(&self, i: f64, j: f64) -> f64 {
        axis_factor(i, self.mu.0, self.sigma.0) * axis_factor(j, self.mu.1, self.sigma.1)
    }
}

fn axis_factor(x: f64, mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if x == mu.round() {
            1.0
        } else {
            0.0
        }
    } else {
        let d = x - mu;
        (-(d * d) / (2.0 * sigma * sigma)).exp()
    }
}

/// Equal-weight mixture density `(1/G) * sum_g p_g(i, j)`.
pub fn gmm_density(components: &[GaussComponent], i: f64, j: f64) -> f64 {
    if components.is_empty() {
        return 0.0;
    }
    components.iter().map(|c| c.density(i, j)).sum::<f64>() / components.len() as f64
}

fn sigma_pixels<R: Rng + ?Sized>(spec: &CorruptionSpec, side: f64, rng: &mut R) -> f64 {
    let frac = if spec.sigma_max > spec.sigma_min {
        rng.random_range(spec.sigma_min..spec.sigma_max)
    } else {
        spec.sigma_min
    };
    frac * side
}

fn sample_mean<R: Rng + ?Sized>(height: usize, width: usize, rng: &mut R) -> (f64, f64) {
    let row = rng.random_range(0.0..=(height - 1) as f64);
    let col = rng.random_range(0.0..=(width - 1) as f64);
    (row, col)
}

/// Draws `spec.gmm_count` components with uniform means over the image and
/// per-axis sigmas in `[sigma_min, sigma_max] * max(height, width)` pixels.
pub fn sample_components<R: Rng + ?Sized>(
    height: usize,
    width: usize,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Vec<GaussComponent> {
    let side = height.max(width) as f64;
    (0..spec.gmm_count)
        .map(|_| {
            let mu = sample_mean(height, width, rng);
            let sigma = (sigma_pixels(spec, side, rng), sigma_pixels(spec, side, rng));
            GaussComponent::new(mu, sigma)
        })
        .collect()
}

/// Fast training-time mask: every component gets an independent Bernoulli
/// trial at every pixel, and the union is clipped to the footprint.
pub fn incompleteness_mask_training<R: Rng + ?Sized>(
    m: &Footprint,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Mask {
    let components = sample_components(m.height(), m.width(), spec, rng);
    training_mask_from_components(m, &components, rng)
}

pub fn training_mask_from_components<R: Rng + ?Sized>(
    m: &Footprint,
    components: &[GaussComponent],
    rng: &mut R,
) -> Mask {
    let (w, h) = m.dims();
    let mut mask = Mask::empty(w, h);
    for comp in components {
        for i in 0..h {
            for j in 0..w {
                let p: f64 = rng.random();
                if comp.density(i as f64, j as f64) > p {
                    mask.set(i, j, true);
                }
            }
        }
    }
    mask.and(m).expect("same dims")
}

// Mixture redraws before giving up on an exact-count mask.
const MAX_MIXTURE_REDRAWS: usize = 1000;

/// Benchmark mask with exactly `round(i_pct/100 * |footprint|)` pixels.
///
/// Pixels are drawn from the mixture density restricted to the footprint,
/// ignoring repeats, until the count is reached. The draw is realised as
/// weighted sampling without replacement (exponential keys), which has the
/// same law as repeated rejection draws but never spins on duplicates. When
/// the mixture has no mass left on unmarked footprint pixels the component
/// means are redrawn and sampling continues.
pub fn incompleteness_mask_benchmark<R: Rng + ?Sized>(
    m: &Footprint,
    i_pct: f64,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Result<Mask> {
    if !(0.0..=100.0).contains(&i_pct) {
        return Err(Error::InvalidSpec(format!(
            "incompleteness {i_pct} outside [0, 100]"
        )));
    }
    let available = m.count();
    let target = (i_pct / 100.0 * available as f64).round() as usize;
    if target > available {
        return Err(Error::InfeasibleMask {
            requested: target,
            available,
        });
    }
    let components = sample_components(m.height(), m.width(), spec, rng);
    mask_from_components(m, target, components, rng)
}

/// Exact-count sampling with a given starting mixture.
pub fn mask_from_components<R: Rng + ?Sized>(
    m: &Footprint,
    target: usize,
    mut components: Vec<GaussComponent>,
    rng: &mut R,
) -> Result<Mask> {
    let (w, h) = m.dims();
    let available = m.count();
    if target > available {
        return Err(Error::InfeasibleMask {
            requested: target,
            available,
        });
    }
    let mut mask = Mask::empty(w, h);
    if target == available {
        return Ok(m.clone());
    }
    let mut marked = 0usize;
    for _ in 0..MAX_MIXTURE_REDRAWS {
        if marked == target {
            return Ok(mask);
        }
        let mut keyed: Vec<(f64, usize)> = Vec::new();
        for idx in m.indices() {
            if mask.data()[idx] {
                continue;
            }
            let (i, j) = ((idx / w) as f64, (idx % w) as f64);
            let weight = gmm_density(&components, i, j);
            if weight > 0.0 {
                // Largest ln(u)/w wins; u in (0, 1].
                let u: f64 = 1.0 - rng.random::<f64>();
                keyed.push((u.ln() / weight, idx));
            }
        }
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, idx) in keyed.iter().take(target - marked) {
            mask.data_mut()[idx] = true;
            marked += 1;
        }
        // Mixture exhausted on the footprint; move the bumps and continue.
        for comp in components.iter_mut() {
            comp.mu = sample_mean(h, w, rng);
        }
    }
    if marked == target {
        Ok(mask)
    } else {
        Err(Error::MaskSamplingStalled {
            marked,
            requested: target,
        })
    }
}
