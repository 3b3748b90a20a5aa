//! Sample lists as CSV with the header `row,col,depth`.

use std::path::Path;

use pcadepth_core::{Sample, SparseSamples};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};

const HEADER: [&str; 3] = ["row", "col", "depth"];

/// Parses samples for a `height x width` grid. Errors name the 1-based file
/// line, counting the header as line 1.
pub fn decode_samples_csv(bytes: &[u8], height: usize, width: usize, path: &Path) -> Result<SparseSamples> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| Error::format(path, format!("line 1: {e}")))?;
    if header.iter().ne(HEADER) {
        return Err(Error::format(path, "line 1: header must be \"row,col,depth\""));
    }
    let mut seen = vec![false; height * width];
    let mut entries = Vec::new();
    for (i, record) in reader.deserialize::<(usize, usize, f64)>().enumerate() {
        let line = i + 2;
        let (row, col, depth) = record.map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        if row >= height || col >= width {
            return Err(Error::format(
                path,
                format!("line {line}: pixel ({row}, {col}) outside the {height}x{width} grid"),
            ));
        }
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::format(path, format!("line {line}: depth {depth} must be finite and positive")));
        }
        if std::mem::replace(&mut seen[row * width + col], true) {
            return Err(Error::format(path, format!("line {line}: duplicate sample at ({row}, {col})")));
        }
        entries.push(Sample { row, col, depth });
    }
    Ok(SparseSamples::new(height, width, entries)?)
}

pub fn read_samples_csv(path: &Path, height: usize, width: usize) -> Result<SparseSamples> {
    decode_samples_csv(&read_bytes(path)?, height, width, path)
}

/// Entries in their stored order; depths use the shortest round-tripping form.
pub fn encode_samples_csv(samples: &SparseSamples) -> Vec<u8> {
    let mut out = String::from("row,col,depth\n");
    for s in samples.entries() {
        out.push_str(&format!("{},{},{}\n", s.row, s.col, s.depth));
    }
    out.into_bytes()
}

pub fn write_samples_csv(path: &Path, samples: &SparseSamples) -> Result<()> {
    write_bytes(path, &encode_samples_csv(samples))
}
