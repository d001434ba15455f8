use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::Subcommand;

/// Crate version plus `git describe` of the build tree.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("DRIFTLAB_GIT_DESCRIBE"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one run: enough to reproduce every output byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Digest of the subcommand and resolved config; shared by every output
    /// file of the run.
    pub run_id: String,
    pub subcommand: Subcommand,
    pub config: RunConfig,
    pub seed: u64,
    /// Worker threads used (0: ambient pool). Outputs do not depend on it.
    pub workers: usize,
    pub tool_version: String,
    /// Seconds since the Unix epoch at start.
    pub started_at: f64,
    pub timings: Vec<StageTiming>,
    pub total_seconds: f64,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

pub fn run_id(sub: Subcommand, config: &RunConfig) -> String {
    let body = serde_json::to_vec(&(sub, config)).expect("serialisable config");
    let digest = Sha256::digest(&body);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Manifest { path: path.into(), message: e.to_string() })
    }
}

/// Wall-clock timings of the named stages of a run.
#[derive(Debug)]
pub struct Stopwatch {
    start: Instant,
    stages: Vec<StageTiming>,
}

impl Default for Stopwatch {
    fn default() -> Self {
        Self::new()
    }
}

impl Stopwatch {
    pub fn new() -> Self {
        Self { start: Instant::now(), stages: Vec::new() }
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages.push(StageTiming { stage: name.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }

    pub fn total(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn into_stages(self) -> Vec<StageTiming> {
        self.stages
    }
}
