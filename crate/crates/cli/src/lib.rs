//! Command-line front end: config parsing, subcommand dispatch, run
//! manifests and CSV / JSON emission.
//!
//! A run writes three files into its output directory:
//! `<subcommand>.csv`, `summary.json` (the same rows plus summary
//! statistics) and `manifest.json` (resolved config, seed, version,
//! timings, warnings). Replaying the manifest reproduces the CSV byte for
//! byte at any worker count.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use config::{parse_config, RunConfig};
pub use error::{CliError, CliResult, EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION};
pub use manifest::{run_id, RunManifest, Stopwatch, TOOL_VERSION};
pub use output::{Cell, Output, Table};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DRIFTLAB_WORKERS";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    ScanKappa,
    Uniqueness,
    BesselCheck,
    HardyBounds,
    Norms,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::ScanKappa => "scan-kappa",
            Subcommand::Uniqueness => "uniqueness",
            Subcommand::BesselCheck => "bessel-check",
            Subcommand::HardyBounds => "hardy-bounds",
            Subcommand::Norms => "norms",
        }
    }

    pub fn csv_file(self) -> String {
        format!("{}.csv", self.name())
    }
}

/// Validate and run `sub` without touching the file system.
pub fn execute(sub: Subcommand, config: &RunConfig, workers: usize) -> CliResult<(Output, Vec<String>, Stopwatch)> {
    let warnings = config.validate(sub)?;
    let mut sw = Stopwatch::new();
    let go = |sw: &mut Stopwatch| match sub {
        Subcommand::Simulate => commands::simulate(config, sw),
        Subcommand::ScanKappa => commands::scan(config, sw),
        Subcommand::Uniqueness => commands::uniqueness(config, sw),
        Subcommand::BesselCheck => commands::bessel_check(config, sw),
        Subcommand::HardyBounds => commands::hardy_bounds(config, sw),
        Subcommand::Norms => commands::norms(config, sw),
    };
    let output = if workers > 0 {
        driftlab_core::rng::with_workers(workers, || go(&mut sw))
    } else {
        go(&mut sw)
    }?;
    Ok((output, warnings, sw))
}

/// Run `sub` and write CSV, summary and manifest into `out`.
pub fn run(sub: Subcommand, config: RunConfig, workers: usize, out: &Path) -> CliResult<RunManifest> {
    let config = config.resolved();
    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let (output, warnings, sw) = execute(sub, &config, workers)?;
    let id = run_id(sub, &config);

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let csv_name = sub.csv_file();
    write(&out.join(&csv_name), output.table.to_csv())?;
    let summary = json!({
        "run_id": id,
        "manifest": MANIFEST_FILE,
        "subcommand": sub,
        "csv": csv_name,
        "columns": output.table.columns,
        "rows": output.table.json_rows(),
        "summary": output.extra,
    });
    write(&out.join(SUMMARY_FILE), pretty(&summary))?;

    let total_seconds = sw.total();
    let manifest = RunManifest {
        run_id: id,
        subcommand: sub,
        seed: config.seed,
        config,
        workers,
        tool_version: TOOL_VERSION.to_string(),
        started_at,
        timings: sw.into_stages(),
        total_seconds,
        warnings,
        outputs: vec![csv_name, SUMMARY_FILE.to_string()],
    };
    write(&out.join(MANIFEST_FILE), pretty(&manifest))?;
    Ok(manifest)
}

/// Re-run the manifest at `path` into `out`. `workers` overrides the
/// recorded worker count.
pub fn replay(path: &Path, workers: Option<usize>, out: &Path) -> CliResult<RunManifest> {
    let m = RunManifest::load(path)?;
    if run_id(m.subcommand, &m.config) != m.run_id {
        return Err(CliError::Manifest {
            path: path.into(),
            message: "run_id does not match the recorded config".into(),
        });
    }
    run(m.subcommand, m.config, workers.unwrap_or(m.workers), out)
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn write(path: &Path, text: String) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
