//! Manifests, procedural toy roofs, config loading and the glue that turns
//! clean roofs into training triples.

mod manifest;
mod toy;

use std::path::Path;

use rand::seq::IndexedRandom;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corruption::{add_sensor_noise, synthesize, CorruptionSpec, IncompletenessMode, TreeLibrary};
use crate::diffusion::TrainingExample;
use crate::error::{Error, Result};
use crate::raster::{
    normalize, write_obj, write_rhm, write_rhm_mask, write_sidecar, Footprint, GridSize, HeightMap,
    NormParams, Sidecar, DEFAULT_RANGE_CAP,
};
use crate::rng::{child_rng, derive_seed};

pub use manifest::{
    load_manifest, parse_manifest, write_manifest, Manifest, ManifestEntry, Split, MANIFEST_COLUMNS,
};
pub use toy::{gen_toy_roof, Archetype, RoofSpec};

/// Parses TOML, falling back to JSON.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    match toml::from_str(text) {
        Ok(v) => Ok(v),
        Err(toml_err) => serde_json::from_str(text).map_err(|json_err| {
            Error::BadConfig(format!("not TOML ({toml_err}) nor JSON ({json_err})"))
        }),
    }
}

pub fn load_config<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySetConfig {
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub side: usize,
    pub pixel_size: f64,
    pub archetypes: Vec<Archetype>,
}

impl Default for ToySetConfig {
    fn default() -> Self {
        Self {
            train: 0,
            test: 20,
            seed: 0,
            side: 24,
            pixel_size: 0.5,
            archetypes: vec![Archetype::Gable, Archetype::Hip],
        }
    }
}

/// Draws a random roof for a sample seed.
pub fn random_toy_roof(
    seed: u64,
    archetypes: &[Archetype],
    grid: GridSize,
    pixel_size: f64,
) -> Result<(HeightMap, Footprint, RoofSpec)> {
    let mut rng = child_rng(seed, "roof");
    let archetype = *archetypes
        .choose(&mut rng)
        .ok_or_else(|| Error::BadConfig("no roof archetypes selected".into()))?;
    let spec = RoofSpec::random(archetype, grid, pixel_size, &mut rng);
    let (_, z, m) = gen_toy_roof(&spec)?;
    Ok((z, m, spec))
}

/// Writes `train + test` procedural roofs under `dir` (`gt/`, `footprint/`,
/// `sidecar/`, `mesh/`) plus `manifest.csv`, and returns the manifest.
pub fn gen_toy_set(dir: impl AsRef<Path>, config: &ToySetConfig) -> Result<Manifest> {
    let dir = dir.as_ref();
    for sub in ["gt", "footprint", "sidecar", "mesh"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let grid = GridSize::square(config.side);
    let mut entries = Vec::new();
    for k in 0..config.train + config.test {
        let id = format!("roof_{k:04}");
        let (z, m, spec) = random_toy_roof(
            derive_seed(config.seed, &id),
            &config.archetypes,
            grid,
            config.pixel_size,
        )?;
        let entry = ManifestEntry {
            gt: format!("gt/{id}.rhm").into(),
            footprint: format!("footprint/{id}.rhm").into(),
            sidecar: format!("sidecar/{id}.json").into(),
            split: if k < config.train { Split::Train } else { Split::Test },
            id,
        };
        write_rhm(dir.join(&entry.gt), &z)?;
        write_rhm_mask(dir.join(&entry.footprint), &m, config.pixel_size)?;
        let params = NormParams::from_map(&z, DEFAULT_RANGE_CAP)?;
        write_sidecar(dir.join(&entry.sidecar), &Sidecar::from_params(&params, None, None))?;
        let obj = dir.join(format!("mesh/{}.obj", entry.id));
        std::fs::write(&obj, write_obj(&spec.mesh())).map_err(|e| Error::io(&obj, e))?;
        entries.push(entry);
    }
    let manifest = Manifest::new(dir, entries)?;
    write_manifest(dir.join("manifest.csv"), &manifest)?;
    Ok(manifest)
}

/// How clean roofs become `(x0, cond, m)` training triples.
#[derive(Debug, Clone)]
pub struct ExampleBuilder {
    pub spec: CorruptionSpec,
    pub trees: TreeLibrary,
    pub mode: IncompletenessMode,
    /// Add global noise and outliers to the normalized observation.
    pub sensor_noise: bool,
    pub range_cap: f64,
}

const MAX_EMPTY_RETRIES: usize = 16;

impl ExampleBuilder {
    pub fn new(spec: CorruptionSpec, trees: TreeLibrary) -> Self {
        Self {
            spec,
            trees,
            mode: IncompletenessMode::Benchmark,
            sensor_noise: true,
            range_cap: DEFAULT_RANGE_CAP,
        }
    }

    /// Corrupts `gt` with a spec seeded from `seed` and normalizes both maps
    /// with the observation's parameters. Outside the footprint `x0` holds
    /// the normalized ground level.
    pub fn build(&self, gt: &HeightMap, m: &Footprint, seed: u64) -> Result<TrainingExample> {
        let mut attempt_seed = seed;
        for attempt in 0..MAX_EMPTY_RETRIES {
            let spec = self.spec.clone().with_seed(attempt_seed);
            let corrupted = synthesize(gt, m, &spec, &self.trees, self.mode)?.corrupted;
            if corrupted.nonzero_count() == 0 {
                attempt_seed = derive_seed(seed, &format!("retry{attempt}"));
                continue;
            }
            let mut cond = normalize(&corrupted, self.range_cap)?;
            if self.sensor_noise {
                cond = add_sensor_noise(&cond, &spec, &mut child_rng(attempt_seed, "sensor")).0;
            }
            let ground = cond.params.to_normalized(0.0);
            let x0 = gt
                .data()
                .iter()
                .map(|v| if *v > 0.0 { cond.params.to_normalized(*v) } else { ground })
                .collect();
            return Ok(TrainingExample {
                x0,
                cond,
                footprint: m.clone(),
            });
        }
        Err(Error::NoRoofData)
    }
}

/// Training source over freshly drawn procedural roofs: example `(step, idx)`
/// depends only on `seed`, `step` and `idx`.
pub fn toy_training_source<'a>(
    builder: &'a ExampleBuilder,
    archetypes: &'a [Archetype],
    grid: GridSize,
    pixel_size: f64,
    seed: u64,
) -> impl Fn(usize, usize) -> Result<TrainingExample> + Sync + 'a {
    move |step, idx| {
        let sample_seed = derive_seed(seed, &format!("{step}/{idx}"));
        let (z, m, _) = random_toy_roof(sample_seed, archetypes, grid, pixel_size)?;
        builder.build(&z, &m, derive_seed(sample_seed, "corrupt"))
    }
}
