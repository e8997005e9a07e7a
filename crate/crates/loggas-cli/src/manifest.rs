//! Run manifests.  Every output directory carries a `manifest.json` naming
//! each file with its SHA-256, the exact configuration used, and the RNG
//! stream layout, so a run can be audited and reproduced from the manifest
//! alone.  No output file is written without a manifest entry: the runner
//! assembles everything in memory and the writer emits files and manifest in
//! one atomic rename.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::time::{SystemTime, UNIX_EPOCH};

/// Bumped when the layout of output files or the manifest itself changes.
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub kind: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub seed_lineage: SeedLineage,
    pub outputs: Vec<OutputEntry>,
    /// The exact configuration the run used, serialized back to TOML.
    pub config_toml: String,
}

/// Root seed plus the derived-stream spans each task consumed, as
/// `(purpose, first_stream, count)`: stream s means `stream_rng(root, s)`.
#[derive(Debug, Clone, Serialize)]
pub struct SeedLineage {
    pub root: u64,
    pub streams: Vec<(String, u64, u64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
