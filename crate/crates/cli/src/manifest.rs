//! Run manifest: enough metadata to reproduce a run from its outputs.
//!
//! The config hash is the SHA-256 of the *canonical* serialization, so it
//! is stable across platforms for identical configuration content,
//! regardless of comment placement or key order in the input file.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::{serialize_scenario, ScenarioConfig};

pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serialize_scenario(cfg).as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_hash: String,
    pub solver: String,
    pub seed: u64,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(cfg: &ScenarioConfig, solver: &str, wall_clock_seconds: f64) -> Self {
        Self {
            config_hash: config_hash(cfg),
            solver: solver.to_string(),
            seed: cfg.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        write!(
            f,
            "[manifest]\nconfig_hash = {}\nsolver = {}\nseed = {}\ntool_version = {}\nwall_clock_seconds = {:?}\n",
            self.config_hash, self.solver, self.seed, self.tool_version, self.wall_clock_seconds
        )
    }
}
