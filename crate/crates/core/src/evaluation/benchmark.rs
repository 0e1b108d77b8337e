use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{footprint_iou, mae_rmse, DEFAULT_IOU_THRESHOLD};
use crate::baselines::{inpaint, BaselineParams, InpaintRequest, Method};
use crate::corruption::{synthesize, CorruptionSpec, IncompletenessMode, TreeLibrary};
use crate::dataset::{Manifest, ManifestEntry, Split};
use crate::diffusion::{restore_with_diffusion, Denoiser, DiffusionSchedule, RestoreOptions};
use crate::error::{Error, Result};
use crate::raster::{read_rhm, read_rhm_mask, Footprint, HeightMap};
use crate::rng::derive_seed;

/// What produces the prediction for a corrupted map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RestoreMethod {
    Baseline(Method),
    Diffusion,
    /// Returns the ground truth; a harness sanity check.
    Identity,
    /// Returns the corrupted map unchanged.
    None,
}

impl RestoreMethod {
    pub fn name(self) -> &'static str {
        match self {
            RestoreMethod::Baseline(m) => m.name(),
            RestoreMethod::Diffusion => "diffusion",
            RestoreMethod::Identity => "identity",
            RestoreMethod::None => "none",
        }
    }
}

impl fmt::Display for RestoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RestoreMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffusion" => Ok(RestoreMethod::Diffusion),
            "identity" => Ok(RestoreMethod::Identity),
            "none" => Ok(RestoreMethod::None),
            other => other.parse().map(RestoreMethod::Baseline),
        }
    }
}

impl From<RestoreMethod> for String {
    fn from(m: RestoreMethod) -> Self {
        m.name().to_string()
    }
}

impl TryFrom<String> for RestoreMethod {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Preset name the spec came from, echoed in reports.
    pub preset: Option<String>,
    pub spec: CorruptionSpec,
    pub method: RestoreMethod,
    pub seed: u64,
    /// Restrict to one split; all entries when unset.
    pub split: Option<Split>,
    pub iou_threshold: f64,
    pub baselines: BaselineParams,
    /// Sampler settings; the per-sample seed is derived from `seed`.
    pub diffusion: RestoreOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            preset: None,
            spec: CorruptionSpec::default(),
            method: RestoreMethod::Baseline(Method::Idw),
            seed: 0,
            split: None,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            baselines: BaselineParams::default(),
            diffusion: RestoreOptions::default(),
        }
    }
}

/// A trained denoiser together with the schedule it was trained on.
#[derive(Clone, Copy)]
pub struct DiffusionModel<'a> {
    pub denoiser: &'a dyn Denoiser,
    pub schedule: &'a DiffusionSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub mae_m: f64,
    pub rmse_m: f64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub mae_m: f64,
    pub rmse_m: f64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: BenchmarkConfig,
    /// Unweighted per-sample means; absent when nothing was evaluated.
    pub mean: Option<MetricMeans>,
    pub samples: Vec<SampleMetrics>,
    pub skipped: Vec<SkippedSample>,
}

impl MetricReport {
    pub fn complete(&self) -> bool {
        self.skipped.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,mae_m,rmse_m,iou\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", s.id, s.mae_m, s.rmse_m, s.iou));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, body) in [("csv", self.to_csv()), ("json", self.to_json())] {
            let p = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

/// The corruption spec for one manifest sample: `spec` reseeded from
/// `(seed, id)`.
pub fn sample_spec(spec: &CorruptionSpec, seed: u64, id: &str) -> CorruptionSpec {
    spec.clone().with_seed(derive_seed(seed, id))
}

fn predict(
    entry: &ManifestEntry,
    gt: &HeightMap,
    m: &Footprint,
    config: &BenchmarkConfig,
    trees: &TreeLibrary,
    model: Option<DiffusionModel<'_>>,
) -> Result<HeightMap> {
    let spec = sample_spec(&config.spec, config.seed, &entry.id);
    let corrupted = synthesize(gt, m, &spec, trees, IncompletenessMode::Benchmark)?.corrupted;
    match config.method {
        RestoreMethod::Identity => Ok(gt.clone()),
        RestoreMethod::None => Ok(corrupted),
        RestoreMethod::Baseline(method) => inpaint(&InpaintRequest {
            z: &corrupted,
            m,
            method,
            params: config.baselines,
        }),
        RestoreMethod::Diffusion => {
            let model = model
                .ok_or_else(|| Error::BadConfig("diffusion method needs a trained model".into()))?;
            let options = RestoreOptions {
                seed: derive_seed(spec.seed, "diffusion"),
                ..config.diffusion.clone()
            };
            Ok(restore_with_diffusion(&corrupted, m, model.denoiser, model.schedule, &options)?.map)
        }
    }
}

type Predictor<'a> = dyn Fn(&ManifestEntry, &HeightMap, &Footprint) -> Result<HeightMap> + Sync + 'a;

fn evaluate(
    manifest: &Manifest,
    entry: &ManifestEntry,
    threshold: f64,
    predictor: &Predictor<'_>,
) -> Result<SampleMetrics> {
    let gt = read_rhm(manifest.resolve(&entry.gt))?;
    let m = read_rhm_mask(manifest.resolve(&entry.footprint))?;
    gt.ensure_same_dims(m.dims())?;
    let pred = predictor(entry, &gt, &m)?;
    let (mae_m, rmse_m) = mae_rmse(&pred, &gt, &m)?;
    let iou = footprint_iou(&pred, &m, threshold)?;
    Ok(SampleMetrics {
        id: entry.id.clone(),
        mae_m,
        rmse_m,
        iou,
    })
}

fn collect_report(
    manifest: &Manifest,
    config: &BenchmarkConfig,
    predictor: &Predictor<'_>,
) -> MetricReport {
    let entries: Vec<&ManifestEntry> = match config.split {
        Some(split) => manifest.split(split).collect(),
        None => manifest.entries.iter().collect(),
    };
    let results: Vec<Result<SampleMetrics>> = entries
        .par_iter()
        .map(|e| evaluate(manifest, e, config.iou_threshold, predictor))
        .collect();

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(s) => samples.push(s),
            Err(e) => {
                log::warn!("{}: {e}", entry.id);
                skipped.push(SkippedSample {
                    id: entry.id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    let mean = (!samples.is_empty()).then(|| {
        let n = samples.len() as f64;
        MetricMeans {
            mae_m: samples.iter().map(|s| s.mae_m).sum::<f64>() / n,
            rmse_m: samples.iter().map(|s| s.rmse_m).sum::<f64>() / n,
            iou: samples.iter().map(|s| s.iou).sum::<f64>() / n,
        }
    });
    MetricReport {
        config: config.clone(),
        mean,
        samples,
        skipped,
    }
}

/// Corrupts every selected manifest entry with [`sample_spec`], restores
/// it and scores it against the ground truth. Samples run in parallel on
/// the current rayon pool; the report keeps manifest order. Failing
/// samples are recorded as skipped.
pub fn run_benchmark(
    manifest: &Manifest,
    config: &BenchmarkConfig,
    trees: &TreeLibrary,
    model: Option<DiffusionModel<'_>>,
) -> Result<MetricReport> {
    config.spec.validate()?;
    if config.method == RestoreMethod::Diffusion && model.is_none() {
        return Err(Error::BadConfig("diffusion method needs a trained model".into()));
    }
    Ok(collect_report(manifest, config, &|e, gt, m| {
        predict(e, gt, m, config, trees, model)
    }))
}

/// Scores predictions that already exist on disk; `prediction_path` maps
/// an entry to its restored raster. Only the split, threshold and echo
/// fields of `config` are used.
pub fn score_predictions(
    manifest: &Manifest,
    config: &BenchmarkConfig,
    prediction_path: &(dyn Fn(&ManifestEntry) -> PathBuf + Sync),
) -> MetricReport {
    collect_report(manifest, config, &|e, _, _| read_rhm(prediction_path(e)))
}
