//! IDX image/label pairs (big-endian; magic 0x803 for images, 0x801 for labels).

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use super::file_stem;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

fn header(cur: &mut Cursor<&[u8]>, magic: u32, dims: usize) -> Result<Vec<usize>> {
    let found = cur.read_u32::<BigEndian>().map_err(|_| Error::TruncatedFile)?;
    if found != magic {
        return Err(Error::BadMagic);
    }
    (0..dims)
        .map(|_| {
            cur.read_u32::<BigEndian>()
                .map(|v| v as usize)
                .map_err(|_| Error::TruncatedFile)
        })
        .collect()
}

fn body(cur: &mut Cursor<&[u8]>, len: usize) -> Result<Vec<u8>> {
    let mut out = vec![0u8; len];
    cur.read_exact(&mut out).map_err(|_| Error::TruncatedFile)?;
    Ok(out)
}

/// Parse an in-memory IDX pair; pixels become features in `[0, 255]`.
pub fn read_idx_pair_bytes(images: &[u8], labels: &[u8], name: &str) -> Result<Dataset> {
    let mut ic = Cursor::new(images);
    let dims = header(&mut ic, 0x0000_0803, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let mut lc = Cursor::new(labels);
    let label_count = header(&mut lc, 0x0000_0801, 1)?[0];
    if count != label_count {
        return Err(Error::CountMismatch(count, label_count));
    }
    let d = rows * cols;
    let pixels = body(&mut ic, count * d)?;
    let raw_labels = body(&mut lc, count)?;
    Dataset::new(
        pixels.into_iter().map(f64::from).collect(),
        raw_labels.into_iter().map(i64::from).collect(),
        d,
        name,
    )
}

pub fn read_idx_pair(images: &Path, labels: &Path) -> Result<Dataset> {
    read_idx_pair_bytes(&fs::read(images)?, &fs::read(labels)?, &file_stem(images))
}
