//! Binary basis file, all little-endian:
//!
//! ```text
//! magic "PCADEPTH" | version u16 | height u32 | width u32 | k u32
//! H·W·k f64, column 0 first | k f64 singular values
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use pcadepth_core::BasisSet;

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};

pub const BASIS_MAGIC: &[u8; 8] = b"PCADEPTH";
pub const BASIS_VERSION: u16 = 1;
const HEADER_LEN: usize = 8 + 2 + 3 * 4;

pub fn encode_basis(basis: &BasisSet) -> Vec<u8> {
    let (h, w, k) = (basis.height(), basis.width(), basis.k());
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (h * w * k + k));
    out.extend_from_slice(BASIS_MAGIC);
    out.extend_from_slice(&BASIS_VERSION.to_le_bytes());
    for dim in [h, w, k] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    // nalgebra storage is column-major already.
    for v in basis.columns().as_slice().iter().chain(basis.singular_values()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_basis(path: &Path, basis: &BasisSet) -> Result<()> {
    write_bytes(path, &encode_basis(basis))
}

fn u32_at(bytes: &[u8], at: usize) -> usize {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize
}

/// The source tag is not stored; the decoded basis is tagged with `path`.
pub fn decode_basis(bytes: &[u8], path: &Path) -> Result<BasisSet> {
    if bytes.len() < 8 || &bytes[..8] != BASIS_MAGIC {
        return Err(Error::format(path, "not a basis file (bad magic)"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != BASIS_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported basis file version {version}, expected {BASIS_VERSION}"),
        ));
    }
    let (h, w, k) = (u32_at(bytes, 10), u32_at(bytes, 14), u32_at(bytes, 18));
    let expected = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(k))
        .and_then(|n| n.checked_add(k))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(path, "header dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len(),
        });
    }
    let floats: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (cols, sv) = floats.split_at(h * w * k);
    let columns = DMatrix::from_column_slice(h * w, k, cols);
    Ok(BasisSet::new(h, w, columns, sv.to_vec(), path.display().to_string())?)
}

pub fn read_basis(path: &Path) -> Result<BasisSet> {
    decode_basis(&read_bytes(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("b.bin")
    }

    fn sample_basis() -> BasisSet {
        let cols = DMatrix::from_fn(6, 2, |i, j| ((i * 7 + j * 3) as f64).sin() / 3.0 + 1e-17 * j as f64);
        BasisSet::new(2, 3, cols, vec![4.5, f64::MIN_POSITIVE], "b.bin").unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let b = sample_basis();
        let bytes = encode_basis(&b);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 14);
        let back = decode_basis(&bytes, p()).unwrap();
        assert_eq!(back, b);
        assert!(back.columns().iter().zip(b.columns().iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(bytes, encode_basis(&back));
    }

    #[test]
    fn layout() {
        let bytes = encode_basis(&sample_basis());
        assert_eq!(&bytes[..8], b"PCADEPTH");
        assert_eq!(&bytes[8..10], &[1, 0]);
        assert_eq!(&bytes[10..22], &[2, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0]);
        let first = f64::from_le_bytes(bytes[22..30].try_into().unwrap());
        assert_eq!(first, sample_basis().columns()[(0, 0)]);
    }

    #[test]
    fn corrupted() {
        let bytes = encode_basis(&sample_basis());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_basis(&bad_magic, p()), Err(Error::Format { .. })));

        let mut bad_version = bytes.clone();
        bad_version[8] = 2;
        let err = decode_basis(&bad_version, p()).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");

        let err = decode_basis(&bytes[..bytes.len() - 5], p()).unwrap_err();
        assert!(matches!(err, Error::Length { expected, actual, .. } if expected == bytes.len() && actual == bytes.len() - 5));
        assert!(err.to_string().contains(&format!("expected {} bytes", bytes.len())));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(decode_basis(&trailing, p()), Err(Error::Length { .. })));
        assert!(decode_basis(&bytes[..15], p()).is_err());
    }
}
