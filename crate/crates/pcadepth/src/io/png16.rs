//! 16-bit greyscale PNG depth: stored value / 256 metres, 0 marks a hole.

use std::io::Cursor;
use std::path::Path;

use pcadepth_core::{ColourImage, DepthMap};
use png::{BitDepth, ColorType, Transformations};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};

const SCALE: f64 = 256.0;

fn decode_frame(bytes: &[u8], path: &Path, transform: Transformations) -> Result<(Vec<u8>, png::OutputInfo)> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(transform);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(path, format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "png: image too large"))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, format!("png: {e}")))?;
    buf.truncate(info.buffer_size());
    Ok((buf, info))
}

pub fn decode_depth_png16(bytes: &[u8], path: &Path) -> Result<DepthMap> {
    let (buf, info) = decode_frame(bytes, path, Transformations::IDENTITY)?;
    if info.color_type != ColorType::Grayscale || info.bit_depth != BitDepth::Sixteen {
        return Err(Error::format(
            path,
            format!(
                "depth png must be 16-bit single channel, got {:?} at {:?}",
                info.color_type, info.bit_depth
            ),
        ));
    }
    let (h, w) = (info.height as usize, info.width as usize);
    let raw: Vec<u16> = buf.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
    let values = raw.iter().map(|&r| r as f64 / SCALE).collect();
    let valid = raw.iter().map(|&r| r != 0).collect();
    Ok(DepthMap::new(h, w, values, valid)?)
}

pub fn read_depth_png16(path: &Path) -> Result<DepthMap> {
    decode_depth_png16(&read_bytes(path)?, path)
}

/// Valid pixels are rounded to the nearest 1/256 m and clamped to
/// `[1, 65535]` so they never collide with the hole value 0.
pub fn encode_depth_png16(depth: &DepthMap) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(depth.values().len() * 2);
    for (&v, &ok) in depth.values().iter().zip(depth.valid()) {
        let raw = if ok && v.is_finite() {
            (v * SCALE).round().clamp(1.0, 65535.0) as u16
        } else {
            0
        };
        data.extend_from_slice(&raw.to_be_bytes());
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, depth.width() as u32, depth.height() as u32);
        enc.set_color(ColorType::Grayscale);
        enc.set_depth(BitDepth::Sixteen);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::format(Path::new("<png>"), e.to_string()))?;
        writer
            .write_image_data(&data)
            .map_err(|e| Error::format(Path::new("<png>"), e.to_string()))?;
        writer
            .finish()
            .map_err(|e| Error::format(Path::new("<png>"), e.to_string()))?;
    }
    Ok(out)
}

pub fn write_depth_png16(path: &Path, depth: &DepthMap) -> Result<()> {
    write_bytes(path, &encode_depth_png16(depth)?)
}

/// Guidance image from any 8 or 16-bit PNG; alpha is dropped and grey is
/// replicated into three channels.
pub fn decode_colour_png(bytes: &[u8], path: &Path) -> Result<ColourImage> {
    let (buf, info) = decode_frame(bytes, path, Transformations::EXPAND)?;
    let (h, w) = (info.height as usize, info.width as usize);
    let samples: Vec<f64> = match info.bit_depth {
        BitDepth::Eight => buf.iter().map(|&b| b as f64 / 255.0).collect(),
        BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0)
            .collect(),
        other => return Err(Error::format(path, format!("unsupported colour bit depth {other:?}"))),
    };
    let channels = info.color_type.samples();
    let data = match info.color_type {
        ColorType::Rgb | ColorType::Rgba => samples
            .chunks_exact(channels)
            .flat_map(|px| [px[0], px[1], px[2]])
            .collect(),
        ColorType::Grayscale | ColorType::GrayscaleAlpha => samples
            .chunks_exact(channels)
            .flat_map(|px| [px[0], px[0], px[0]])
            .collect(),
        other => return Err(Error::format(path, format!("unsupported colour type {other:?}"))),
    };
    Ok(ColourImage::new(h, w, data)?)
}
