//! Readers and writers for depth, colour, sample and basis files.
//!
//! Every writer is deterministic, and every reader rejects a malformed file
//! instead of guessing at it.

mod basis_file;
mod pfm;
mod png16;
mod ppm;
mod samples;

use std::fs;
use std::path::Path;

use pcadepth_core::{ColourImage, DepthMap};

use crate::error::{Error, Result};

pub use basis_file::{decode_basis, encode_basis, read_basis, write_basis, BASIS_MAGIC, BASIS_VERSION};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use png16::{decode_colour_png, decode_depth_png16, encode_depth_png16, read_depth_png16, write_depth_png16};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};
pub use samples::{decode_samples_csv, encode_samples_csv, read_samples_csv, write_samples_csv};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads `count` whitespace-separated ASCII header tokens, then exactly one
/// whitespace byte. Returns the tokens and the offset of the payload.
pub(crate) fn header_tokens<'a>(
    bytes: &'a [u8],
    count: usize,
    allow_comments: bool,
    path: &Path,
) -> Result<(Vec<&'a str>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if allow_comments && i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !(allow_comments && bytes[i] == b'#') {
            i += 1;
        }
        if start == i {
            return Err(Error::format(path, "truncated header"));
        }
        let token = std::str::from_utf8(&bytes[start..i]).map_err(|_| Error::format(path, "non-ASCII header"))?;
        tokens.push(token);
    }
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(Error::format(path, "header must end with a single whitespace byte"));
    }
    Ok((tokens, i + 1))
}

pub(crate) fn parse_dim(token: &str, what: &str, path: &Path) -> Result<usize> {
    match token.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::format(path, format!("invalid {what} {token:?}"))),
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Depth from a 16-bit PNG (metres × 256) or a PFM (disparity), by extension.
pub fn read_depth(path: &Path) -> Result<DepthMap> {
    match extension(path).as_str() {
        "png" => read_depth_png16(path),
        "pfm" => read_pfm(path),
        other => Err(Error::format(path, format!("unsupported depth extension {other:?}; use .png or .pfm"))),
    }
}

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    match extension(path).as_str() {
        "png" => write_depth_png16(path, depth),
        "pfm" => write_pfm(path, depth),
        other => Err(Error::format(path, format!("unsupported depth extension {other:?}; use .png or .pfm"))),
    }
}

/// Colour from a binary PPM/PGM or an 8/16-bit PNG, by extension.
pub fn read_colour(path: &Path) -> Result<ColourImage> {
    match extension(path).as_str() {
        "ppm" | "pgm" | "pnm" => read_ppm(path),
        "png" => decode_colour_png(&read_bytes(path)?, path),
        other => Err(Error::format(path, format!("unsupported colour extension {other:?}; use .ppm or .png"))),
    }
}
