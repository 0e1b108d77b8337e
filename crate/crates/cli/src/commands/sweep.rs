use std::path::PathBuf;

use roofkit_core::dataset::Split;
use roofkit_core::diffusion::RestoreOptions;
use roofkit_core::evaluation::{BenchmarkConfig, RestoreMethod};

use crate::commands::eval::{benchmark, finish};
use crate::failure::Failure;
use crate::options::{load_model, parse_steps, read_manifest, SpecArgs};
use crate::output::write_text;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Comma-separated sampling step counts.
    #[arg(long, default_value = "60,125,250,500")]
    steps: String,
    #[arg(long)]
    split: Option<Split>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_footprint: bool,
    /// Output directory: `sweep.csv` plus one report per step count.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let steps = parse_steps(&args.steps)?;
    let manifest = read_manifest(&args.manifest)?;
    let model = load_model(&args.checkpoint)?;
    let (preset, spec) = args.spec.resolve()?;
    let mut table = String::from("steps,mae_m,rmse_m,iou\n");
    for n in steps {
        let config = BenchmarkConfig {
            preset: Some(preset.clone()),
            spec: spec.clone(),
            method: RestoreMethod::Diffusion,
            seed: args.seed,
            split: args.split,
            diffusion: RestoreOptions {
                n_steps: n,
                no_footprint: args.no_footprint,
                ..Default::default()
            },
            ..Default::default()
        };
        let report = benchmark(&manifest, &config, &args.spec, Some(&model))?;
        report.write(&args.out, &format!("steps_{n}"))?;
        finish(&report)?;
        let mean = report.mean.expect("complete report has a mean");
        table.push_str(&format!("{n},{},{},{}\n", mean.mae_m, mean.rmse_m, mean.iou));
    }
    write_text(&args.out.join("sweep.csv"), &table)
}
