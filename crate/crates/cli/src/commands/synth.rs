use std::path::PathBuf;

use roofkit_core::corruption::{synthesize, IncompletenessMode};
use roofkit_core::dataset::Split;
use roofkit_core::evaluation::sample_spec;
use roofkit_core::raster::{infer_footprint, read_rhm, read_rhm_mask, write_rhm};
use serde_json::json;

use crate::failure::{Failure, UsageExt};
use crate::options::{read_manifest, SpecArgs};
use crate::output::{ensure_dir, write_json, write_png16};

#[derive(clap::Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["gt", "manifest"]))]
pub struct Args {
    /// Single ground-truth height map.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Footprint for `--gt`; inferred from its nonzero pixels otherwise.
    #[arg(long, requires = "gt")]
    footprint: Option<PathBuf>,
    /// Corrupt every entry of a manifest; each sample is seeded from
    /// `--seed` and its id.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Restrict `--manifest` to one split.
    #[arg(long, requires = "manifest")]
    split: Option<Split>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write a 16-bit grayscale preview (single-map mode).
    #[arg(long, requires = "gt")]
    png: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let (preset, spec) = args.spec.resolve()?;
    let trees = args.spec.trees()?;
    ensure_dir(&args.out)?;
    if let Some(gt_path) = &args.gt {
        let gt = read_rhm(gt_path).usage()?;
        let m = match &args.footprint {
            Some(p) => read_rhm_mask(p).usage()?,
            None => infer_footprint(&gt),
        };
        let spec = spec.clone().with_seed(args.seed);
        let out = synthesize(&gt, &m, &spec, &trees, IncompletenessMode::Benchmark)?;
        write_rhm(args.out.join("corrupted.rhm"), &out.corrupted)?;
        write_json(&args.out.join("provenance.json"), &out.provenance)?;
        if let Some(png) = &args.png {
            write_png16(png, &out.corrupted)?;
        }
    } else if let Some(manifest_path) = &args.manifest {
        let manifest = read_manifest(manifest_path)?;
        let entries: Vec<_> = match args.split {
            Some(s) => manifest.split(s).collect(),
            None => manifest.entries.iter().collect(),
        };
        let mut failed = 0;
        for e in entries {
            let result = (|| -> Result<(), Failure> {
                let gt = read_rhm(manifest.resolve(&e.gt))?;
                let m = read_rhm_mask(manifest.resolve(&e.footprint))?;
                let spec = sample_spec(&spec, args.seed, &e.id);
                let out = synthesize(&gt, &m, &spec, &trees, IncompletenessMode::Benchmark)?;
                write_rhm(args.out.join(format!("{}.rhm", e.id)), &out.corrupted)?;
                write_json(&args.out.join(format!("{}.provenance.json", e.id)), &out.provenance)
            })();
            if let Err(f) = result {
                log::error!("{}: {}", e.id, f.error());
                failed += 1;
            }
        }
        if failed > 0 {
            return Err(Failure::processing(format!("{failed} samples failed")));
        }
    }
    write_json(
        &args.out.join("synth.config.json"),
        &json!({
            "gt": args.gt,
            "footprint": args.footprint,
            "manifest": args.manifest,
            "split": args.split,
            "preset": preset,
            "spec": spec,
            "seed": args.seed,
            "trees": args.spec.trees,
        }),
    )
}
