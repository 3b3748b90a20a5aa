//! Binary PPM (P6) colour and PGM (P5) grey, 8 or 16 bits per sample.

use std::path::Path;

use pcadepth_core::ColourImage;

use super::{header_tokens, parse_dim, read_bytes, write_bytes};
use crate::error::{Error, Result};

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<ColourImage> {
    let (tokens, offset) = header_tokens(bytes, 4, true, path)?;
    let channels = match tokens[0] {
        "P6" => 3,
        "P5" => 1,
        other => return Err(Error::format(path, format!("bad PNM magic {other:?}"))),
    };
    let width = parse_dim(tokens[1], "width", path)?;
    let height = parse_dim(tokens[2], "height", path)?;
    let maxval = parse_dim(tokens[3], "maxval", path)?;
    if maxval > 65535 {
        return Err(Error::format(path, format!("maxval {maxval} exceeds 65535")));
    }
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let payload = &bytes[offset..];
    let expected = width * height * channels * bytes_per;
    if payload.len() != expected {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected: offset + expected,
            actual: bytes.len(),
        });
    }
    let max = maxval as f64;
    let mut samples = Vec::with_capacity(width * height * channels);
    for chunk in payload.chunks_exact(bytes_per) {
        let v = if bytes_per == 1 { chunk[0] as usize } else { u16::from_be_bytes([chunk[0], chunk[1]]) as usize };
        if v > maxval {
            return Err(Error::format(path, format!("sample {v} exceeds maxval {maxval}")));
        }
        samples.push(v as f64 / max);
    }
    let data = if channels == 3 { samples } else { samples.iter().flat_map(|&g| [g, g, g]).collect() };
    Ok(ColourImage::new(height, width, data)?)
}

pub fn read_ppm(path: &Path) -> Result<ColourImage> {
    decode_ppm(&read_bytes(path)?, path)
}

/// P6 with maxval 255; intensities are rounded to the nearest level.
pub fn encode_ppm(image: &ColourImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn write_ppm(path: &Path, image: &ColourImage) -> Result<()> {
    write_bytes(path, &encode_ppm(image))
}
