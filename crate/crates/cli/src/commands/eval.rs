use std::path::PathBuf;

use roofkit_core::baselines::BaselineParams;
use roofkit_core::dataset::{Manifest, Split};
use roofkit_core::diffusion::{DiffusionSchedule, RestoreOptions, UNet};
use roofkit_core::evaluation::{
    run_benchmark, score_predictions, BenchmarkConfig, DiffusionModel, MetricReport,
    RestoreMethod, DEFAULT_IOU_THRESHOLD,
};

use crate::failure::{Failure, UsageExt};
use crate::options::{load_model, overlay, read_manifest, SpecArgs};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    manifest: PathBuf,
    /// Score stored predictions `<pred>/<id>.rhm` instead of running a method.
    #[arg(long, conflicts_with_all = ["method", "checkpoint"])]
    pred: Option<PathBuf>,
    /// Method to benchmark: a baseline, diffusion, identity or none.
    #[arg(long, default_value = "idw")]
    method: RestoreMethod,
    /// Split to evaluate; every entry when omitted.
    #[arg(long)]
    split: Option<Split>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Diffusion checkpoint for `--method diffusion`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Sampling steps for the diffusion sampler.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long)]
    no_footprint: bool,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    iou_threshold: f64,
    /// Report directory (`report.csv`, `report.json`).
    #[arg(long)]
    out: PathBuf,
    /// TOML/JSON file whose fields override the benchmark settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub(crate) fn benchmark(
    manifest: &Manifest,
    config: &BenchmarkConfig,
    spec: &SpecArgs,
    model: Option<&(UNet, DiffusionSchedule)>,
) -> Result<MetricReport, Failure> {
    let trees = spec.trees()?;
    let model = model.map(|(net, schedule)| DiffusionModel {
        denoiser: net,
        schedule,
    });
    Ok(run_benchmark(manifest, config, &trees, model)?)
}

pub fn run(args: Args) -> Result<(), Failure> {
    let manifest = read_manifest(&args.manifest)?;
    let (preset, spec) = args.spec.resolve()?;
    let base = BenchmarkConfig {
        preset: Some(preset),
        spec,
        method: args.method,
        seed: args.seed,
        split: args.split,
        iou_threshold: args.iou_threshold,
        baselines: BaselineParams::default(),
        diffusion: RestoreOptions {
            n_steps: args.steps,
            no_footprint: args.no_footprint,
            ..Default::default()
        },
    };
    let config: BenchmarkConfig = overlay(&base, args.config.as_deref())?;
    config.spec.validate().usage()?;

    let report = if let Some(pred) = &args.pred {
        score_predictions(&manifest, &config, &|e| pred.join(format!("{}.rhm", e.id)))
    } else {
        let model = match (config.method, &args.checkpoint) {
            (RestoreMethod::Diffusion, Some(p)) => Some(load_model(p)?),
            (RestoreMethod::Diffusion, None) => {
                return Err(Failure::usage("--method diffusion needs --checkpoint"))
            }
            _ => None,
        };
        benchmark(&manifest, &config, &args.spec, model.as_ref())?
    };
    report.write(&args.out, "report")?;
    finish(&report)
}

pub(crate) fn finish(report: &MetricReport) -> Result<(), Failure> {
    if let Some(mean) = report.mean {
        log::info!(
            "{} samples: MAE {:.4} m, RMSE {:.4} m, IoU {:.4}",
            report.samples.len(),
            mean.mae_m,
            mean.rmse_m,
            mean.iou
        );
    }
    for s in &report.skipped {
        log::error!("{}: {}", s.id, s.reason);
    }
    if report.complete() {
        Ok(())
    } else {
        Err(Failure::processing(format!("{} samples were not evaluated", report.skipped.len())))
    }
}
