//! RHM raster container and the per-map JSON sidecar.
//!
//! Layout (all little endian): `b"RHM1"`, width `u32`, height `u32`,
//! pixel size `f32`, then `width * height` row-major `f32` heights.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::normalize::NormParams;
use super::{HeightMap, Mask};
use crate::error::{Error, Result};

pub const RHM_MAGIC: &[u8; 4] = b"RHM1";
const HEADER_LEN: usize = 16;

pub fn encode_rhm(map: &HeightMap) -> Vec<u8> {
    encode_raw(map.width(), map.height(), map.pixel_size(), map.data())
}

fn encode_raw(width: usize, height: usize, pixel_size: f64, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * values.len());
    out.extend_from_slice(RHM_MAGIC);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&(pixel_size as f32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

fn decode_raw(bytes: &[u8]) -> Result<(usize, usize, f64, Vec<f64>)> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != RHM_MAGIC {
        return Err(Error::format("rhm", "missing RHM1 header"));
    }
    let word = |at: usize| [bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]];
    let width = u32::from_le_bytes(word(4)) as usize;
    let height = u32::from_le_bytes(word(8)) as usize;
    let pixel_size = f32::from_le_bytes(word(12)) as f64;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format("rhm", "dimensions overflow"))?;
    if bytes.len() - HEADER_LEN != expected {
        return Err(Error::format(
            "rhm",
            format!(
                "{width}x{height} raster needs {expected} payload bytes, found {}",
                bytes.len() - HEADER_LEN
            ),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((width, height, pixel_size, values))
}

pub fn decode_rhm(bytes: &[u8]) -> Result<HeightMap> {
    let (w, h, ps, values) = decode_raw(bytes)?;
    HeightMap::new(w, h, ps, values).map_err(|e| Error::format("rhm", e.to_string()))
}

/// Masks share the height container with values restricted to {0, 1}.
pub fn encode_rhm_mask(mask: &Mask, pixel_size: f64) -> Vec<u8> {
    let values: Vec<f64> = mask
        .data()
        .iter()
        .map(|b| if *b { 1.0 } else { 0.0 })
        .collect();
    encode_raw(mask.width(), mask.height(), pixel_size, &values)
}

pub fn decode_rhm_mask(bytes: &[u8]) -> Result<Mask> {
    let (w, h, _, values) = decode_raw(bytes)?;
    let data = values
        .iter()
        .map(|v| match *v {
            0.0 => Ok(false),
            1.0 => Ok(true),
            other => Err(Error::format("rhm", format!("mask value {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Mask::new(w, h, data)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_rhm(path: impl AsRef<Path>) -> Result<HeightMap> {
    decode_rhm(&read_bytes(path.as_ref())?)
}

pub fn write_rhm(path: impl AsRef<Path>, map: &HeightMap) -> Result<()> {
    write_bytes(path.as_ref(), &encode_rhm(map))
}

pub fn read_rhm_mask(path: impl AsRef<Path>) -> Result<Mask> {
    decode_rhm_mask(&read_bytes(path.as_ref())?)
}

pub fn write_rhm_mask(path: impl AsRef<Path>, mask: &Mask, pixel_size: f64) -> Result<()> {
    write_bytes(path.as_ref(), &encode_rhm_mask(mask, pixel_size))
}

/// Per-map metadata: normalization range plus geographic anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub z_min: f64,
    pub z_max: f64,
    pub range_cap: f64,
    pub extra_scale: f64,
    #[serde(default)]
    pub lon: Option<f64>,
    #[serde(default)]
    pub lat: Option<f64>,
}

impl Sidecar {
    pub fn from_params(params: &NormParams, lon: Option<f64>, lat: Option<f64>) -> Self {
        Self {
            z_min: params.z_min,
            z_max: params.z_max,
            range_cap: params.range_cap,
            extra_scale: params.extra_scale,
            lon,
            lat,
        }
    }

    pub fn params(&self) -> NormParams {
        NormParams {
            z_min: self.z_min,
            z_max: self.z_max,
            range_cap: self.range_cap,
            extra_scale: self.extra_scale,
        }
    }
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Sidecar> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format("sidecar", e.to_string()))
}

pub fn write_sidecar(path: impl AsRef<Path>, sidecar: &Sidecar) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar)
        .map_err(|e| Error::format("sidecar", e.to_string()))?;
    write_bytes(path.as_ref(), text.as_bytes())
}
