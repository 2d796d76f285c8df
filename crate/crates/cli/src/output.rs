use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Provenance of one run. Timings vary between runs; everything else is
/// reproduced from the config and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub config: String,
    pub seed: u64,
    pub frames_per_phase: usize,
    pub versions: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timings_s: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config_text: &str, seed: u64, frames_per_phase: usize) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("heraldlab".to_owned(), env!("CARGO_PKG_VERSION").to_owned());
        Self {
            command: command.to_owned(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            config: config_text.to_owned(),
            seed,
            frames_per_phase,
            versions,
            outputs: BTreeMap::new(),
            timings_s: BTreeMap::new(),
        }
    }
}

/// Wall-clock timer for named stages.
pub struct Stopwatch(std::time::Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(std::time::Instant::now())
    }

    pub fn lap(&mut self, manifest: &mut RunManifest, stage: &str) {
        let now = std::time::Instant::now();
        manifest.timings_s.insert(stage.to_owned(), (now - self.0).as_secs_f64());
        self.0 = now;
    }
}
