//! Dataset ingestion, sketch persistence and run reports.

mod binary;
mod idx;
mod report;
mod sketch;
mod table;

pub use binary::{decode_binary_dataset, encode_binary_dataset, read_binary_dataset, write_binary_dataset};
pub use idx::{read_idx_pair, read_idx_pair_bytes};
pub use report::{dataset_fingerprint, hex_digest, sha256_hex, DecaySummary, InputFingerprint, RunReport};
pub use sketch::{decode_sketch, encode_sketch, read_sketch, write_sketch};
pub use table::{read_csv_dataset, read_csv_from, LabelColumn};

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::Result;

/// Load a dataset, choosing the reader by extension: `.csv` as CSV with the
/// label in the last column, anything else as the binary format.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_csv_dataset(path, &LabelColumn::Last),
        _ => read_binary_dataset(path),
    }
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
