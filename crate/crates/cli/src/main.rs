//! `roofkit`: generate toy roofs, corrupt height maps, restore them with
//! baselines or a trained diffusion model, and benchmark the results.

mod commands;
mod failure;
mod options;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "roofkit", version, about = "Roof height-map repair toolkit")]
struct Cli {
    /// Worker threads for per-sample parallelism.
    #[arg(long, global = true, env = "ROOFKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterize an OBJ roof mesh into a height map and footprint.
    Rasterize(commands::rasterize::Args),
    /// Corrupt ground-truth height maps with trees, sparsity and incompleteness.
    Synth(commands::synth::Args),
    /// Fill missing roof pixels with a baseline or a trained diffusion model.
    Restore(commands::restore::Args),
    /// Train the reference denoiser on procedural or manifest roofs.
    Train(commands::train::Args),
    /// Score a method (or stored predictions) on a manifest.
    Eval(commands::eval::Args),
    /// Evaluate a diffusion checkpoint at several sampling step counts.
    SweepSteps(commands::sweep::Args),
    /// Write a procedural toy-roof dataset with a manifest.
    GenToy(commands::gen_toy::Args),
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Processing(e.into()))?;
    }
    match cli.command {
        Command::Rasterize(a) => commands::rasterize::run(a),
        Command::Synth(a) => commands::synth::run(a),
        Command::Restore(a) => commands::restore::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::SweepSteps(a) => commands::sweep::run(a),
        Command::GenToy(a) => commands::gen_toy::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error());
            ExitCode::from(f.code())
        }
    }
}
