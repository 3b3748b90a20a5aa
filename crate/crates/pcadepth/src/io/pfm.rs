//! Single-channel PFM ("Pf"). A negative scale means little-endian samples;
//! rows are stored bottom to top. Non-finite and non-positive values are holes.

use std::path::Path;

use pcadepth_core::DepthMap;

use super::{header_tokens, parse_dim, read_bytes, write_bytes};
use crate::error::{Error, Result};

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<DepthMap> {
    let (tokens, offset) = header_tokens(bytes, 4, false, path)?;
    match tokens[0] {
        "Pf" => {}
        "PF" => return Err(Error::format(path, "three-channel PFM is not a depth map")),
        other => return Err(Error::format(path, format!("bad PFM magic {other:?}"))),
    }
    let width = parse_dim(tokens[1], "width", path)?;
    let height = parse_dim(tokens[2], "height", path)?;
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| Error::format(path, format!("invalid scale {:?}", tokens[3])))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(path, "scale must be finite and non-zero"));
    }
    let little = scale < 0.0;

    let payload = &bytes[offset..];
    let expected = width * height * 4;
    if payload.len() != expected {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected: offset + expected,
            actual: bytes.len(),
        });
    }
    let mut values = vec![0.0; width * height];
    let mut valid = vec![false; width * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) } as f64;
        let (stored_row, col) = (i / width, i % width);
        let p = (height - 1 - stored_row) * width + col;
        if v.is_finite() && v > 0.0 {
            values[p] = v;
            valid[p] = true;
        }
    }
    Ok(DepthMap::new(height, width, values, valid)?)
}

pub fn read_pfm(path: &Path) -> Result<DepthMap> {
    decode_pfm(&read_bytes(path)?, path)
}

/// Little-endian, scale -1, holes written as +inf. Values are narrowed to f32.
pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    let (h, w) = (depth.height(), depth.width());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(h * w * 4);
    for row in (0..h).rev() {
        for col in 0..w {
            let p = row * w + col;
            let v = if depth.valid()[p] { depth.values()[p] as f32 } else { f32::INFINITY };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    write_bytes(path, &encode_pfm(depth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("t.pfm")
    }

    #[test]
    fn single_pixel() {
        let mut le = b"Pf\n1 1\n-1.0\n".to_vec();
        le.extend_from_slice(&3.5f32.to_le_bytes());
        let d = decode_pfm(&le, p()).unwrap();
        assert_eq!((d.values()[0], d.valid()[0]), (3.5, true));

        let mut be = b"Pf\n1 1\n1.0\n".to_vec();
        be.extend_from_slice(&3.5f32.to_be_bytes());
        assert_eq!(decode_pfm(&be, p()).unwrap().values()[0], 3.5);
    }

    #[test]
    fn holes() {
        let mut b = b"Pf 3 1 -1.0\n".to_vec();
        for v in [f32::INFINITY, -2.0, f32::NAN] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(decode_pfm(&b, p()).unwrap().valid_count(), 0);
    }

    #[test]
    fn rows_are_flipped() {
        let mut b = b"Pf\n1 2\n-1\n".to_vec();
        b.extend_from_slice(&1.0f32.to_le_bytes()); // bottom row
        b.extend_from_slice(&2.0f32.to_le_bytes()); // top row
        assert_eq!(decode_pfm(&b, p()).unwrap().values(), &[2.0, 1.0]);
    }

    #[test]
    fn round_trip() {
        let d = DepthMap::new(2, 3, vec![1.5, 0.0, 3.25, 4.0, 5.0, 0.125], vec![true, false, true, true, true, true]).unwrap();
        let bytes = encode_pfm(&d);
        assert_eq!(decode_pfm(&bytes, p()).unwrap(), d);
        assert_eq!(bytes, encode_pfm(&d));
    }

    #[test]
    fn malformed() {
        assert!(decode_pfm(b"P6\n1 1\n-1\n\0\0\0\0", p()).is_err());
        assert!(decode_pfm(b"PF\n1 1\n-1\n\0\0\0\0", p()).is_err());
        assert!(decode_pfm(b"Pf\n1 1\n0\n\0\0\0\0", p()).is_err());
        assert!(decode_pfm(b"Pf\n0 1\n-1\n", p()).is_err());
        assert!(matches!(decode_pfm(b"Pf\n2 1\n-1\n\0\0\0\0", p()), Err(Error::Length { .. })));
        assert!(matches!(decode_pfm(b"Pf\n1 1\n-1\n\0\0\0\0\0", p()), Err(Error::Length { .. })));
        assert!(decode_pfm(b"Pf\n1 1", p()).is_err());
    }
}
