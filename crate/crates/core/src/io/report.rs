//! Machine-readable run reports (one JSON object per run).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::binary::encode_binary_dataset;
use crate::dataset::Dataset;
use crate::engine::DecayPoint;
use crate::harness::CorrelateSummary;

/// Lowercase hex of a byte string.
pub fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a byte string, as hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex_digest(&Sha256::digest(bytes))
}

/// SHA-256 (hex) of the dataset's binary encoding.
pub fn dataset_fingerprint(ds: &Dataset) -> String {
    sha256_hex(&encode_binary_dataset(ds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub repeats: usize,
    pub points: Vec<DecayPoint>,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_pp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr_pp: Option<f64>,
    #[serde(rename = "L")]
    pub num_projections: usize,
    #[serde(default)]
    pub dropped: usize,
    pub p: f64,
    pub k: usize,
    pub seed: u64,
    pub projector: String,
    pub moment_law: String,
    pub tie_phi: bool,
    pub standardize: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_fingerprint: Option<String>,
    pub inputs: Vec<InputFingerprint>,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub correlate: Option<CorrelateSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decay: Option<DecaySummary>,
}

impl RunReport {
    pub fn to_json(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> crate::error::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let report = RunReport {
            command: "distance".into(),
            value: Some(0.1 + 0.2),
            mean_pp: Some(std::f64::consts::PI / 3.0),
            stderr_pp: Some(1e-300),
            num_projections: 100,
            dropped: 0,
            p: 2.0,
            k: 5,
            seed: u64::MAX,
            projector: "linear".into(),
            moment_law: "poisson:1,2,3,4,5".into(),
            tie_phi: true,
            standardize: false,
            config_fingerprint: Some("ab".repeat(32)),
            inputs: vec![InputFingerprint {
                path: "a.csv".into(),
                sha256: "00".into(),
            }],
            wall_seconds: 0.123_456_789_012_345_67,
            correlate: None,
            decay: Some(DecaySummary {
                repeats: 3,
                points: vec![DecayPoint {
                    num_projections: 10,
                    mean_abs_error: f64::from_bits(0.017f64.to_bits() + 1),
                }],
                slope: -0.5,
                intercept: 1.0 / 3.0,
            }),
        };
        let text = report.to_json().unwrap();
        assert!(text.contains("\"L\":100"));
        assert_eq!(RunReport::from_json(&text).unwrap(), report);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = Dataset::new(vec![1.0, 2.0], vec![0, 1], 1, "a").unwrap();
        let b = Dataset::new(vec![1.0, 2.5], vec![0, 1], 1, "a").unwrap();
        assert_eq!(dataset_fingerprint(&a).len(), 64);
        assert_ne!(dataset_fingerprint(&a), dataset_fingerprint(&b));
        assert_eq!(dataset_fingerprint(&a), dataset_fingerprint(&a.clone().with_name("z")));
    }
}
