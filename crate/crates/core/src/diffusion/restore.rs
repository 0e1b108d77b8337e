use serde::{Deserialize, Serialize};

use super::denoiser::Denoiser;
use super::process::{sample, SampleOptions, Snapshot};
use super::schedule::DiffusionSchedule;
use crate::error::Result;
use crate::raster::{denormalize, normalize, Footprint, HeightMap, Mask, DEFAULT_RANGE_CAP};
use crate::rng::child_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RestoreOptions {
    pub n_steps: usize,
    /// Sample every pixel instead of only the footprint.
    pub no_footprint: bool,
    pub range_cap: f64,
    pub seed: u64,
    pub record_percent: Vec<f64>,
}

impl Default for RestoreOptions {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            no_footprint: false,
            range_cap: DEFAULT_RANGE_CAP,
            seed: 0,
            record_percent: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Restoration {
    pub map: HeightMap,
    pub trajectory: Vec<Snapshot>,
}

/// Normalizes the observation, runs the sampler and converts the result
/// back to meters. Pixels outside the sampled mask come back as 0.
pub fn restore_with_diffusion(
    observed: &HeightMap,
    m: &Footprint,
    denoiser: &dyn Denoiser,
    schedule: &DiffusionSchedule,
    options: &RestoreOptions,
) -> Result<Restoration> {
    observed.ensure_same_dims(m.dims())?;
    let cond = normalize(observed, options.range_cap)?;
    let (w, h) = observed.dims();
    let full;
    let mask = if options.no_footprint {
        full = Mask::full(w, h);
        &full
    } else {
        m
    };
    let sample_options = SampleOptions {
        n_steps: options.n_steps,
        record_percent: options.record_percent.clone(),
    };
    let mut rng = child_rng(options.seed, "sampler");
    let out = sample(&cond, mask, denoiser, schedule, &sample_options, &mut rng)?;
    Ok(Restoration {
        map: denormalize(&out.x0),
        trajectory: out.trajectory,
    })
}
