//! Binary model snapshot: `RDCK`, a u32 version, a length-prefixed JSON
//! header with the schedule and network configs, then every parameter tensor
//! as `name, rank, dims, f32 values`. All integers and floats little-endian.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schedule::ScheduleConfig;
use super::unet::{UNet, UNetConfig};
use super::denoiser::Trainable;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"RDCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    schedule: ScheduleConfig,
    model: UNetConfig,
}

pub fn encode_checkpoint(net: &UNet, schedule: &ScheduleConfig) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        schedule: *schedule,
        model: net.config().clone(),
    })
    .expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    let tensors = net.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, shape, values) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("checkpoint", "truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Restores the network (parameters widened from f32) and its schedule.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(UNet, ScheduleConfig)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint", "bad magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format("checkpoint", format!("unsupported version {version}")));
    }
    let len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(len)?)
        .map_err(|e| Error::format("checkpoint", format!("header: {e}")))?;
    let template = UNet::new(header.model.clone())?;
    let expected: Vec<(String, Vec<usize>)> = template
        .tensors()
        .into_iter()
        .map(|(n, s, _)| (n, s))
        .collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(Error::format(
            "checkpoint",
            format!("expected {} tensors, found {count}", expected.len()),
        ));
    }
    let mut params = Vec::with_capacity(template.param_count());
    for (want_name, want_shape) in expected {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::format("checkpoint", "tensor name is not UTF-8"))?;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if name != want_name || shape != want_shape {
            return Err(Error::format(
                "checkpoint",
                format!("tensor {name} {shape:?} does not match {want_name} {want_shape:?}"),
            ));
        }
        let n: usize = shape.iter().product();
        for chunk in r.take(n * 4)?.chunks_exact(4) {
            params.push(f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64);
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::format("checkpoint", "trailing bytes"));
    }
    let mut net = template;
    net.params_mut().copy_from_slice(&params);
    Ok((net, header.schedule))
}

pub fn save_checkpoint(path: &Path, net: &UNet, schedule: &ScheduleConfig) -> Result<()> {
    std::fs::write(path, encode_checkpoint(net, schedule)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(UNet, ScheduleConfig)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
