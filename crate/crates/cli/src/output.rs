use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use roofkit_core::raster::HeightMap;
use serde::Serialize;

use crate::failure::Failure;

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::processing(format!("{}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|e| Failure::processing(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// 16-bit grayscale preview scaled so the highest pixel is white.
pub fn write_png16(path: &Path, map: &HeightMap) -> Result<(), Failure> {
    let top = map.data().iter().cloned().fold(0.0, f64::max);
    let scale = if top > 0.0 { 65535.0 / top } else { 0.0 };
    let mut bytes = Vec::with_capacity(map.data().len() * 2);
    for v in map.data() {
        bytes.extend_from_slice(&((v * scale).round().clamp(0.0, 65535.0) as u16).to_be_bytes());
    }
    let file = File::create(path).map_err(|e| Failure::processing(format!("{}: {e}", path.display())))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), map.width() as u32, map.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&bytes)?;
    Ok(())
}
