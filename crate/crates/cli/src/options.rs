use std::path::{Path, PathBuf};

use clap::Args;
use roofkit_core::corruption::{CorruptionSpec, TreeLibrary};
use roofkit_core::dataset::{load_manifest, parse_config, Manifest};
use roofkit_core::diffusion::{load_checkpoint, DiffusionSchedule, UNet};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::failure::{Failure, UsageExt};

pub const DEFAULT_PRESET: &str = "s90_i30";

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Corruption preset `s<pct>_i<pct>`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Corruption spec file (TOML or JSON); its fields override the preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Directory of canopy rasters; procedural canopies otherwise.
    #[arg(long)]
    pub trees: Option<PathBuf>,
}

impl SpecArgs {
    pub fn resolve(&self) -> Result<(String, CorruptionSpec), Failure> {
        let preset = self.preset.clone().unwrap_or_else(|| DEFAULT_PRESET.to_string());
        let base = CorruptionSpec::preset(&preset).usage()?;
        let spec: CorruptionSpec = overlay(&base, self.spec.as_deref())?;
        spec.validate().usage()?;
        Ok((preset, spec))
    }

    pub fn trees(&self) -> Result<TreeLibrary, Failure> {
        match &self.trees {
            Some(dir) => TreeLibrary::load_dir(dir).usage(),
            None => Ok(TreeLibrary::standard(0)),
        }
    }
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, top) => *slot = top,
    }
}

/// `base` with every field present in the TOML/JSON file replaced.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, file: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = file else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let top: Value = parse_config(&text).usage()?;
    let mut merged = serde_json::to_value(base)?;
    merge(&mut merged, top);
    serde_json::from_value(merged)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, Failure> {
    load_manifest(path).usage()
}

pub fn load_model(path: &Path) -> Result<(UNet, DiffusionSchedule), Failure> {
    let (net, config) = load_checkpoint(path).usage()?;
    Ok((net, DiffusionSchedule::new(config).usage()?))
}

pub fn parse_steps(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|s| match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Failure::usage(format!("bad step count `{s}` in --steps"))),
        })
        .collect()
}
