//! Sketch files, little-endian:
//!
//! ```text
//! b"SKCH" | u32 version = 1 | [u8; 32] fingerprint | u64 L | u64 n
//! L blocks of n ascending f64 (a dropped projection is a block of NaN)
//! ```

use std::fs;
use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::file_stem;
use crate::engine::ProjectionSketch;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SKCH";
const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 32 + 8 + 8;

pub fn encode_sketch(sketch: &ProjectionSketch) -> Result<Vec<u8>> {
    let n = sketch.block_len().unwrap_or(0);
    if sketch.blocks.iter().flatten().any(|b| b.len() != n) {
        return Err(Error::InvalidConfig("sketch blocks differ in length".into()));
    }
    let l = sketch.blocks.len();
    let mut out = Vec::with_capacity(HEADER + 8 * l * n);
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION)?;
    out.extend_from_slice(&sketch.fingerprint);
    out.write_u64::<LittleEndian>(l as u64)?;
    out.write_u64::<LittleEndian>(n as u64)?;
    for block in &sketch.blocks {
        match block {
            Some(b) => b.iter().try_for_each(|&v| out.write_f64::<LittleEndian>(v))?,
            None => (0..n).try_for_each(|_| out.write_f64::<LittleEndian>(f64::NAN))?,
        }
    }
    Ok(out)
}

pub fn decode_sketch(bytes: &[u8], name: &str) -> Result<ProjectionSketch> {
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
    let mut fingerprint = [0u8; 32];
    fingerprint.copy_from_slice(&bytes[8..40]);
    cur.set_position(36);
    let l = cur.read_u64::<LittleEndian>()?;
    let n = cur.read_u64::<LittleEndian>()?;
    let body = l
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .ok_or(Error::TruncatedFile)?;
    if (bytes.len() - HEADER) as u64 != body {
        return Err(Error::TruncatedFile);
    }
    let mut blocks = Vec::with_capacity(l as usize);
    for index in 0..l as usize {
        let mut block = vec![0.0; n as usize];
        cur.read_f64_into::<LittleEndian>(&mut block)?;
        if n > 0 && block.iter().all(|v| v.is_nan()) {
            blocks.push(None);
            continue;
        }
        if block.iter().any(|v| !v.is_finite()) || block.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig(format!(
                "sketch block {index} is not finite and ascending"
            )));
        }
        blocks.push(Some(block));
    }
    Ok(ProjectionSketch {
        fingerprint,
        name: name.to_string(),
        blocks,
    })
}

pub fn read_sketch(path: &Path) -> Result<ProjectionSketch> {
    decode_sketch(&fs::read(path)?, &file_stem(path))
}

pub fn write_sketch(sketch: &ProjectionSketch, path: &Path) -> Result<()> {
    fs::write(path, encode_sketch(sketch)?)?;
    Ok(())
}
