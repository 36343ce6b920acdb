use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Cli;

/// Hex SHA-256.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Record of one run. Replaying `args` on the same inputs reproduces the
/// result byte for byte: every random choice derives from the recorded
/// seeds and parallel reductions have a fixed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub args: Cli,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    /// Path to SHA-256 of every file read.
    pub input_digests: BTreeMap<String, String>,
    /// `"result"` to SHA-256 of the emitted JSON.
    pub output_digests: BTreeMap<String, String>,
    pub exit_code: i32,
    /// Not covered by the determinism contract.
    pub elapsed_ms: u128,
}

impl RunManifest {
    pub fn new(
        cli: &Cli,
        seeds: Vec<u64>,
        input_digests: BTreeMap<String, String>,
        result: &str,
        exit_code: i32,
        elapsed: Duration,
    ) -> Self {
        RunManifest {
            subcommand: cli.command.name().to_string(),
            args: cli.clone(),
            seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digests,
            output_digests: BTreeMap::from([("result".to_string(), digest(result.as_bytes()))]),
            exit_code,
            elapsed_ms: elapsed.as_millis(),
        }
    }
}
