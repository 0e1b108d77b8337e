use std::path::PathBuf;

use roofkit_core::corruption::CorruptionSpec;
use roofkit_core::dataset::{toy_training_source, Archetype, ExampleBuilder, Split};
use roofkit_core::diffusion::{
    save_checkpoint, train, DiffusionSchedule, OptimizerConfig, ScheduleConfig,
    TrainConfig, TrainingExample, UNet, UNetConfig,
};
use roofkit_core::raster::{read_rhm, read_rhm_mask, GridSize};
use roofkit_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, UsageExt};
use crate::options::{overlay, read_manifest, SpecArgs};
use crate::output::{write_json, write_text};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Checkpoint to write; the loss curve and config echo go next to it.
    #[arg(long)]
    out: PathBuf,
    /// Optimizer steps.
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 8)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train with an all-ones mask (footprint inferred at restore time).
    #[arg(long)]
    no_footprint: bool,
    /// Draw training roofs from the manifest's train split instead of
    /// procedural roofs.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Procedural roof side in pixels.
    #[arg(long, default_value_t = 24)]
    side: usize,
    #[arg(long, default_value_t = 0.5)]
    pixel_size: f64,
    #[arg(long, default_value = "gable,hip")]
    archetypes: String,
    #[command(flatten)]
    spec: SpecArgs,
    /// TOML/JSON file whose fields override the flags (sections `train`,
    /// `model`, `schedule`, `roofs`).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoofSource {
    side: usize,
    pixel_size: f64,
    archetypes: Vec<Archetype>,
    manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSettings {
    preset: String,
    spec: CorruptionSpec,
    train: TrainConfig,
    model: UNetConfig,
    schedule: ScheduleConfig,
    roofs: RoofSource,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let archetypes = args
        .archetypes
        .split(',')
        .map(|a| a.trim().parse::<Archetype>())
        .collect::<Result<Vec<_>, _>>()
        .usage()?;
    let (preset, spec) = args.spec.resolve()?;
    let base = TrainSettings {
        preset,
        spec,
        train: TrainConfig {
            steps: args.steps,
            batch_size: args.batch,
            seed: args.seed,
            no_footprint: args.no_footprint,
            optimizer: OptimizerConfig::toy(),
        },
        model: UNetConfig::default(),
        schedule: ScheduleConfig::default(),
        roofs: RoofSource {
            side: args.side,
            pixel_size: args.pixel_size,
            archetypes,
            manifest: args.manifest.clone(),
        },
    };
    let settings: TrainSettings = overlay(&base, args.config.as_deref())?;
    settings.spec.validate().usage()?;
    let schedule = DiffusionSchedule::new(settings.schedule).usage()?;
    let mut net = UNet::new(settings.model.clone()).usage()?;
    let mut builder = ExampleBuilder::new(settings.spec.clone(), args.spec.trees()?);
    if settings.train.no_footprint {
        builder.spec.keep_exterior_trees = true;
    }
    log::info!("training {} parameters for {} steps", net.param_count(), settings.train.steps);

    let mut on_step = |step: usize, loss: f64| {
        if step % 100 == 0 || step == 1 {
            log::info!("step {step} loss {loss:.5}");
        }
    };
    let report = match &settings.roofs.manifest {
        None => {
            let grid = GridSize::square(settings.roofs.side);
            let source = toy_training_source(
                &builder,
                &settings.roofs.archetypes,
                grid,
                settings.roofs.pixel_size,
                derive_seed(settings.train.seed, "roofs"),
            );
            train(&mut net, &schedule, &settings.train, source, &mut on_step)?
        }
        Some(path) => {
            let manifest = read_manifest(path)?;
            let mut roofs = Vec::new();
            for e in manifest.split(Split::Train) {
                let z = read_rhm(manifest.resolve(&e.gt)).usage()?;
                let m = read_rhm_mask(manifest.resolve(&e.footprint)).usage()?;
                roofs.push((e.id.clone(), z, m));
            }
            if roofs.is_empty() {
                return Err(Failure::usage("manifest has no train entries"));
            }
            let seed = settings.train.seed;
            let source = |step: usize, idx: usize| -> roofkit_core::Result<TrainingExample> {
                let pick = derive_seed(seed, &format!("pick{step}/{idx}"));
                let (id, z, m) = &roofs[(pick % roofs.len() as u64) as usize];
                builder.build(z, m, derive_seed(pick, id))
            };
            train(&mut net, &schedule, &settings.train, source, &mut on_step)?
        }
    };

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        crate::output::ensure_dir(parent)?;
    }
    save_checkpoint(&args.out, &net, &settings.schedule)?;
    let mut curve = String::from("step,loss\n");
    for (i, l) in report.losses.iter().enumerate() {
        curve.push_str(&format!("{},{l}\n", i + 1));
    }
    write_text(&args.out.with_extension("losses.csv"), &curve)?;
    write_json(&args.out.with_extension("config.json"), &settings)?;
    let n = report.losses.len();
    log::info!(
        "mean loss: first 100 steps {:.5}, last quarter {:.5}",
        report.mean_loss(1, 100.min(n)),
        report.mean_loss(n - n / 4, n)
    );
    Ok(())
}
