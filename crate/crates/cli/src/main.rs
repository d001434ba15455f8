use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use driftlab_cli::{parse_config, replay, run, CliError, CliResult, RunConfig, RunManifest, Subcommand, WORKERS_ENV};

#[derive(Debug, Parser)]
#[command(name = "driftlab", version = driftlab_cli::TOOL_VERSION, about = "Monte Carlo laboratory for singular-drift particle systems")]
struct Cli {
    /// Output directory for the CSV, summary and manifest.
    #[arg(long, global = true, default_value = "driftlab-out")]
    out: PathBuf,

    /// Worker threads (0: one per core). Outputs do not depend on it.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, ClapSubcommand)]
enum Command {
    /// Simulate an ensemble and report per-path collision records.
    Simulate(ConfigArgs),
    /// Collision probability and sticky fraction over a kappa grid.
    ScanKappa(ConfigArgs),
    /// Compare two mollifier families along their schedule.
    Uniqueness(ConfigArgs),
    /// Squared Bessel samplers against their exact moments and hitting law.
    BesselCheck(ConfigArgs),
    /// Hardy constant bounds and kappa thresholds over a (d, N) grid.
    HardyBounds {
        #[command(flatten)]
        base: ConfigArgs,
        /// Inclusive dimension range `lo:hi`.
        #[arg(long, value_parser = parse_range)]
        d_range: Option<(usize, usize)>,
        /// Inclusive particle-number range `lo:hi`.
        #[arg(long, value_parser = parse_range)]
        n_range: Option<(usize, usize)>,
        /// Add variational upper estimates for N <= 3.
        #[arg(long)]
        variational: bool,
    },
    /// Size functionals of the Hardy drift.
    Norms(ConfigArgs),
    /// Re-run a recorded manifest.
    Replay {
        manifest: PathBuf,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    match s.split_once(':') {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

fn load(args: &ConfigArgs) -> CliResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text)?
        }
        None => parse_config("")?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> CliResult<RunManifest> {
    let workers = cli.workers.unwrap_or(0);
    let (sub, cfg) = match &cli.command {
        Command::Simulate(a) => (Subcommand::Simulate, load(a)?),
        Command::ScanKappa(a) => (Subcommand::ScanKappa, load(a)?),
        Command::Uniqueness(a) => (Subcommand::Uniqueness, load(a)?),
        Command::BesselCheck(a) => (Subcommand::BesselCheck, load(a)?),
        Command::Norms(a) => (Subcommand::Norms, load(a)?),
        Command::HardyBounds { base, d_range, n_range, variational } => {
            let mut cfg = load(base)?;
            if let Some(r) = d_range {
                cfg.hardy.d_range = *r;
            }
            if let Some(r) = n_range {
                cfg.hardy.n_range = *r;
            }
            cfg.hardy.variational |= *variational;
            (Subcommand::HardyBounds, cfg)
        }
        Command::Replay { manifest } => return replay(manifest, cli.workers, &cli.out),
    };
    run(sub, cfg, workers, &cli.out)
}

fn report(m: &RunManifest, out: &Path) {
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} run {} ({:.2} s)", m.subcommand.name(), m.run_id, m.total_seconds);
    for f in m.outputs.iter().map(String::as_str).chain([driftlab_cli::MANIFEST_FILE]) {
        println!("  {}", out.join(f).display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(m) => {
            report(&m, &cli.out);
            ExitCode::from(driftlab_cli::EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
