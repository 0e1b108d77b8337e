use std::path::PathBuf;

use roofkit_core::raster::{
    infer_footprint, parse_obj, rasterize, write_rhm, write_rhm_mask, write_sidecar, GridSize,
    NormParams, Sidecar, DEFAULT_RANGE_CAP,
};
use serde_json::json;

use crate::failure::{Failure, UsageExt};
use crate::output::{ensure_dir, write_json, write_png16};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Roof mesh in OBJ format, coordinates in meters.
    #[arg(long)]
    mesh: PathBuf,
    /// Output directory for heights.rhm, footprint.rhm and sidecar.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pixel_size: f64,
    /// Grid side in pixels.
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Shift the mesh so its bounding box is centered in the grid.
    #[arg(long)]
    center: bool,
    /// Also write a 16-bit grayscale preview.
    #[arg(long)]
    png: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.mesh)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.mesh.display())))?;
    let mut mesh = parse_obj(&text).usage()?;
    if args.center {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let half = args.size as f64 * args.pixel_size / 2.0;
        for v in &mut mesh.vertices {
            for k in 0..2 {
                v[k] += half - (lo[k] + hi[k]) / 2.0;
            }
        }
    }
    let z = rasterize(&mesh, args.pixel_size, GridSize::square(args.size))?;
    let m = infer_footprint(&z);
    ensure_dir(&args.out)?;
    write_rhm(args.out.join("heights.rhm"), &z)?;
    write_rhm_mask(args.out.join("footprint.rhm"), &m, args.pixel_size)?;
    let params = NormParams::from_map(&z, DEFAULT_RANGE_CAP)?;
    write_sidecar(args.out.join("sidecar.json"), &Sidecar::from_params(&params, None, None))?;
    if let Some(png) = &args.png {
        write_png16(png, &z)?;
    }
    write_json(
        &args.out.join("rasterize.config.json"),
        &json!({
            "mesh": args.mesh,
            "pixel_size": args.pixel_size,
            "size": args.size,
            "center": args.center,
        }),
    )?;
    log::info!("rasterized {} footprint pixels", m.count());
    Ok(())
}
