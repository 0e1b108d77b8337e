use std::path::{Path, PathBuf};

use roofkit_core::baselines::{inpaint, BaselineParams, InpaintRequest};
use roofkit_core::diffusion::{restore_with_diffusion, DiffusionSchedule, RestoreOptions, UNet};
use roofkit_core::evaluation::RestoreMethod;
use roofkit_core::raster::{
    normalize, read_rhm, read_rhm_mask, write_rhm, Footprint, HeightMap, Mask, DEFAULT_RANGE_CAP,
};
use roofkit_core::rng::derive_seed;
use serde_json::json;

use crate::failure::{Failure, UsageExt};
use crate::options::{load_model, read_manifest};
use crate::output::{ensure_dir, write_json, write_png16};

#[derive(clap::Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "manifest"]))]
pub struct Args {
    /// Corrupted height map (0 = missing).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Footprint of `--input`; required unless `--no-footprint`.
    #[arg(long, requires = "input")]
    footprint: Option<PathBuf>,
    /// Restore `<input-dir>/<id>.rhm` for every manifest entry, using the
    /// manifest footprints.
    #[arg(long, requires = "input_dir")]
    manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    input_dir: Option<PathBuf>,
    /// linear, nearest, spline, idw, pmdiff or diffusion.
    #[arg(long)]
    method: RestoreMethod,
    /// Output file (single map) or directory (manifest mode).
    #[arg(long)]
    out: PathBuf,
    /// Diffusion checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Sampling steps for the diffusion sampler.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Restore over the whole grid, inferring the footprint as well.
    #[arg(long)]
    no_footprint: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    idw_power: f64,
    #[arg(long, default_value_t = 16)]
    idw_neighbors: usize,
    /// Write sampler snapshots at 0, 25, 50, 75 and 100 % (single map).
    #[arg(long, requires = "input")]
    trajectory: Option<PathBuf>,
    /// Also write a 16-bit grayscale preview (single map).
    #[arg(long, requires = "input")]
    png: Option<PathBuf>,
}

struct Restorer<'a> {
    method: RestoreMethod,
    params: BaselineParams,
    model: Option<&'a (UNet, DiffusionSchedule)>,
    options: RestoreOptions,
}

impl Restorer<'_> {
    fn restore(
        &self,
        z: &HeightMap,
        m: &Footprint,
        seed: u64,
        trajectory: Option<&Path>,
    ) -> Result<HeightMap, Failure> {
        match self.method {
            RestoreMethod::Baseline(method) => Ok(inpaint(&InpaintRequest {
                z,
                m,
                method,
                params: self.params,
            })?),
            RestoreMethod::Diffusion => {
                let (net, schedule) = self.model.expect("model loaded for diffusion");
                let options = RestoreOptions {
                    seed,
                    ..self.options.clone()
                };
                let out = restore_with_diffusion(z, m, net, schedule, &options)?;
                if let Some(dir) = trajectory {
                    write_trajectory(dir, z, m, self.options.no_footprint, &out.trajectory)?;
                }
                Ok(out.map)
            }
            RestoreMethod::Identity | RestoreMethod::None => Err(Failure::usage(format!(
                "`{}` is an evaluation reference, not a restoration method",
                self.method
            ))),
        }
    }
}

fn write_trajectory(
    dir: &Path,
    z: &HeightMap,
    m: &Footprint,
    no_footprint: bool,
    snapshots: &[roofkit_core::diffusion::Snapshot],
) -> Result<(), Failure> {
    ensure_dir(dir)?;
    let params = normalize(z, DEFAULT_RANGE_CAP)?.params;
    let (w, h) = z.dims();
    let mask = if no_footprint { Mask::full(w, h) } else { m.clone() };
    for s in snapshots {
        let data = s
            .x
            .iter()
            .zip(mask.data())
            .map(|(v, inside)| if *inside { params.to_meters(*v).max(0.0) } else { 0.0 })
            .collect();
        let map = HeightMap::new(w, h, z.pixel_size(), data)?;
        write_rhm(dir.join(format!("step_{:03}.rhm", s.percent.round() as u32)), &map)?;
    }
    Ok(())
}

pub fn run(args: Args) -> Result<(), Failure> {
    let model = match (args.method, &args.checkpoint) {
        (RestoreMethod::Diffusion, Some(p)) => Some(load_model(p)?),
        (RestoreMethod::Diffusion, None) => {
            return Err(Failure::usage("--method diffusion needs --checkpoint"))
        }
        _ => None,
    };
    let restorer = Restorer {
        method: args.method,
        params: BaselineParams {
            idw_power: args.idw_power,
            idw_neighbors: args.idw_neighbors,
            ..Default::default()
        },
        model: model.as_ref(),
        options: RestoreOptions {
            n_steps: args.steps,
            no_footprint: args.no_footprint,
            record_percent: if args.trajectory.is_some() {
                vec![0.0, 25.0, 50.0, 75.0, 100.0]
            } else {
                Vec::new()
            },
            ..Default::default()
        },
    };
    let echo_path;
    if let Some(input) = &args.input {
        let z = read_rhm(input).usage()?;
        let m = match (&args.footprint, args.no_footprint) {
            (Some(p), _) => read_rhm_mask(p).usage()?,
            (None, true) => Mask::full(z.width(), z.height()),
            (None, false) => return Err(Failure::usage("--input needs --footprint or --no-footprint")),
        };
        let m = if args.no_footprint { Mask::full(z.width(), z.height()) } else { m };
        let restored = restorer.restore(&z, &m, args.seed, args.trajectory.as_deref())?;
        if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        write_rhm(&args.out, &restored)?;
        if let Some(png) = &args.png {
            write_png16(png, &restored)?;
        }
        echo_path = args.out.with_extension("config.json");
    } else {
        let manifest = read_manifest(args.manifest.as_deref().expect("manifest mode"))?;
        let input_dir = args.input_dir.as_deref().expect("required with --manifest");
        ensure_dir(&args.out)?;
        let mut failed = 0;
        for e in &manifest.entries {
            let input = input_dir.join(format!("{}.rhm", e.id));
            if !input.exists() {
                continue;
            }
            let result = (|| -> Result<(), Failure> {
                let z = read_rhm(&input)?;
                let m = if args.no_footprint {
                    Mask::full(z.width(), z.height())
                } else {
                    read_rhm_mask(manifest.resolve(&e.footprint))?
                };
                let restored = restorer.restore(&z, &m, derive_seed(args.seed, &e.id), None)?;
                write_rhm(args.out.join(format!("{}.rhm", e.id)), &restored)?;
                Ok(())
            })();
            if let Err(f) = result {
                log::error!("{}: {}", e.id, f.error());
                failed += 1;
            }
        }
        if failed > 0 {
            return Err(Failure::processing(format!("{failed} samples failed")));
        }
        echo_path = args.out.join("restore.config.json");
    }
    write_json(
        &echo_path,
        &json!({
            "input": args.input,
            "footprint": args.footprint,
            "manifest": args.manifest,
            "input_dir": args.input_dir,
            "method": args.method,
            "checkpoint": args.checkpoint,
            "steps": args.steps,
            "no_footprint": args.no_footprint,
            "seed": args.seed,
            "baselines": restorer.params,
        }),
    )
}
