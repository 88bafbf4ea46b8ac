//! Binary dataset layout, all little-endian:
//!
//! ```text
//! b"SOTD" | u32 version = 1 | u64 n | u64 d | n*d f64 features | n i64 labels
//! ```

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::file_stem;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SOTD";
const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 8 + 8;

pub fn encode_binary_dataset(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * (ds.features().len() + ds.len()));
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION).unwrap();
    out.write_u64::<LittleEndian>(ds.len() as u64).unwrap();
    out.write_u64::<LittleEndian>(ds.dim() as u64).unwrap();
    for &v in ds.features() {
        out.write_f64::<LittleEndian>(v).unwrap();
    }
    for &l in ds.labels() {
        out.write_i64::<LittleEndian>(l).unwrap();
    }
    out
}

pub fn decode_binary_dataset(bytes: &[u8], name: &str) -> Result<Dataset> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile);
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER {
        return Err(Error::TruncatedFile);
    }
    let mut cur = Cursor::new(&bytes[4..]);
    let version = cur.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let n = cur.read_u64::<LittleEndian>()?;
    let d = cur.read_u64::<LittleEndian>()?;
    let body = n
        .checked_mul(d)
        .and_then(|nd| nd.checked_add(n))
        .and_then(|c| c.checked_mul(8))
        .ok_or(Error::TruncatedFile)?;
    if (bytes.len() - HEADER) as u64 != body {
        return Err(Error::TruncatedFile);
    }
    let (n, d) = (n as usize, d as usize);
    let mut features = vec![0.0; n * d];
    cur.read_f64_into::<LittleEndian>(&mut features)?;
    let mut labels = vec![0i64; n];
    cur.read_i64_into::<LittleEndian>(&mut labels)?;
    debug_assert!(cur.read(&mut [0u8]).map(|r| r == 0).unwrap_or(true));
    Dataset::new(features, labels, d, name)
}

pub fn read_binary_dataset(path: &Path) -> Result<Dataset> {
    decode_binary_dataset(&fs::read(path)?, &file_stem(path))
}

pub fn write_binary_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, encode_binary_dataset(ds))?;
    Ok(())
}
