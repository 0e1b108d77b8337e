use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::CorruptionSpec;
use crate::raster::NormalizedMap;

/// Draws one `sigma ~ U[0, sigma_max]` for the whole map and resamples every
/// known pixel from `N(value, sigma^2)`. Missing pixels are untouched.
/// Returns the noisy map and the drawn sigma.
pub fn inject_global_noise<R: Rng + ?Sized>(
    x: &NormalizedMap,
    sigma_max: f64,
    rng: &mut R,
) -> (NormalizedMap, f64) {
    assert!(sigma_max >= 0.0, "sigma_max must be non-negative");
    let sigma = if sigma_max > 0.0 {
        rng.random_range(0.0..=sigma_max)
    } else {
        0.0
    };
    let mut out = x.clone();
    if sigma > 0.0 {
        for (v, missing) in out.data.iter_mut().zip(x.missing.data()) {
            if !missing {
                let n: f64 = rng.sample(StandardNormal);
                *v += sigma * n;
            }
        }
    }
    (out, sigma)
}

/// Replaces each known pixel with `U(-1, 1)` independently with
/// probability `prob`. Returns the map and the number of replaced pixels.
pub fn inject_outliers<R: Rng + ?Sized>(
    x: &NormalizedMap,
    prob: f64,
    rng: &mut R,
) -> (NormalizedMap, usize) {
    assert!((0.0..=1.0).contains(&prob), "probability outside [0, 1]");
    let mut out = x.clone();
    let mut replaced = 0;
    if prob > 0.0 {
        for (v, missing) in out.data.iter_mut().zip(x.missing.data()) {
            if !missing && rng.random::<f64>() < prob {
                *v = rng.random_range(-1.0..1.0);
                replaced += 1;
            }
        }
    }
    (out, replaced)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub global_sigma: f64,
    pub outliers: usize,
}

/// Global noise followed by outliers, with the spec's settings.
pub fn add_sensor_noise<R: Rng + ?Sized>(
    x: &NormalizedMap,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> (NormalizedMap, NoiseRecord) {
    let (noisy, global_sigma) = inject_global_noise(x, spec.global_sigma_max, rng);
    let (noisy, outliers) = inject_outliers(&noisy, spec.outlier_prob, rng);
    (
        noisy,
        NoiseRecord {
            global_sigma,
            outliers,
        },
    )
}
