use std::path::PathBuf;

use roofkit_core::dataset::{gen_toy_set, Archetype, ToySetConfig};

use crate::failure::{Failure, UsageExt};
use crate::options::overlay;
use crate::output::write_json;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Dataset directory; receives manifest.csv and the rasters.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    train: usize,
    #[arg(long, default_value_t = 20)]
    test: usize,
    /// Grid side in pixels.
    #[arg(long, default_value_t = 24)]
    side: usize,
    #[arg(long, default_value_t = 0.5)]
    pixel_size: f64,
    /// Comma-separated roof types: flat, shed, gable, hip, gable-dormer.
    #[arg(long, default_value = "gable,hip")]
    archetypes: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML/JSON file whose fields override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let archetypes = args
        .archetypes
        .split(',')
        .map(|a| a.trim().parse::<Archetype>())
        .collect::<Result<Vec<_>, _>>()
        .usage()?;
    let base = ToySetConfig {
        train: args.train,
        test: args.test,
        seed: args.seed,
        side: args.side,
        pixel_size: args.pixel_size,
        archetypes,
    };
    let config: ToySetConfig = overlay(&base, args.config.as_deref())?;
    let manifest = gen_toy_set(&args.out, &config)?;
    write_json(&args.out.join("gen-toy.config.json"), &config)?;
    log::info!("wrote {} roofs to {}", manifest.entries.len(), args.out.display());
    Ok(())
}
