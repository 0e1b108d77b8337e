//! Seeded synthesis of corrupted roof height maps from clean ground truth.
//!
//! Order follows the data pipeline: tree occlusion, then random sparsity,
//! then Gaussian-mixture incompleteness, all in meters. Sensor noise
//! (global Gaussian and outliers) is applied afterwards in normalized units.

mod gmm;
mod noise;
mod pipeline;
mod spec;
mod trees;

pub use gmm::{
    gmm_density, incompleteness_mask_benchmark, incompleteness_mask_training,
    mask_from_components, sample_components, training_mask_from_components, GaussComponent,
};
pub use noise::{add_sensor_noise, inject_global_noise, inject_outliers, NoiseRecord};
pub use pipeline::{synthesize, IncompletenessMode, Provenance, Synthesis};
pub use spec::{CorruptionSpec, PRESETS};
pub use trees::{inject_trees, TreeLibrary, TreeOutcome, TreePlacement, TreeStamp};

use rand::Rng;

use crate::error::{Error, Result};
use crate::raster::{Footprint, HeightMap, Mask};

/// Zeroes exactly `round(s/100 * |footprint|)` footprint pixels chosen
/// uniformly without replacement. Pixels outside the footprint are kept.
pub fn inject_sparsity<R: Rng + ?Sized>(
    z: &HeightMap,
    m: &Footprint,
    s_pct: f64,
    rng: &mut R,
) -> Result<HeightMap> {
    Ok(sparsity_mask(m, s_pct, rng)?.apply_to(z))
}

/// The pixels [`inject_sparsity`] would remove.
pub fn sparsity_mask<R: Rng + ?Sized>(m: &Footprint, s_pct: f64, rng: &mut R) -> Result<Mask> {
    if !(0.0..=100.0).contains(&s_pct) {
        return Err(Error::InvalidSpec(format!("sparsity {s_pct} outside [0, 100]")));
    }
    let candidates: Vec<usize> = m.indices().collect();
    let count = (s_pct / 100.0 * candidates.len() as f64).round() as usize;
    let mut mask = Mask::empty(m.width(), m.height());
    for k in rand::seq::index::sample(rng, candidates.len(), count) {
        mask.data_mut()[candidates[k]] = true;
    }
    Ok(mask)
}

/// Zeroes every masked pixel.
pub fn inject_incompleteness(z: &HeightMap, mask: &Mask) -> Result<HeightMap> {
    z.ensure_same_dims(mask.dims())?;
    Ok(mask.apply_to(z))
}

impl Mask {
    /// Copy of `z` with the set pixels of `self` zeroed.
    pub(crate) fn apply_to(&self, z: &HeightMap) -> HeightMap {
        let mut out = z.clone();
        for (v, hit) in out.data_mut().iter_mut().zip(self.data()) {
            if *hit {
                *v = 0.0;
            }
        }
        out
    }
}
