//! Command-line entry point: parse flags, load and validate the flat TOML
//! configuration, resolve the output directory, record the manifest, and
//! dispatch. Exit codes: 0 success, 2 configuration error, 3 solver error,
//! 4 internal invariant violation.

mod commands;
mod config;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use crate::commands::{cmd_sweep, dispatch_single, Ctx};
use crate::config::RunConfig;
use crate::report::{sha256_hex, write_error_file, write_json, CliError, Manifest};

#[derive(Parser)]
#[command(
    name = "annulus",
    version,
    about = "Experiment runner for the annulus variational solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Flat TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` from the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Concurrent sweep entries (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// RNG seed (overrides `seed` from the config).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Log progress details to stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the positive radial profile: profile.csv + report.json.
    Radial,
    /// Symmetry-breaking diagnostics: report.json, indicator.csv, margins.csv.
    Stability,
    /// Cone-constrained mountain-pass search on the 2-d grid.
    Mp2d,
    /// Exponential-integrability probe over an alpha ladder.
    Tmprobe,
    /// Fan one scalar config key over a list of values.
    Sweep,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Radial => "radial",
            Cmd::Stability => "stability",
            Cmd::Mp2d => "mp2d",
            Cmd::Tmprobe => "tmprobe",
            Cmd::Sweep => "sweep",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    // Structured failures land in error.json once an output directory is
    // known; before that, stderr is the only channel.
    let mut error_dir = cli.out.clone();
    match run(&cli, &mut error_dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(dir) = &error_dir {
                if fs::create_dir_all(dir).is_ok() {
                    write_error_file(dir, &err);
                }
            }
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli, error_dir: &mut Option<PathBuf>) -> Result<(), CliError> {
    let config_path = cli.config.as_deref().ok_or_else(|| {
        CliError::Config(vec![
            "--config: required (path to a TOML run configuration)".into(),
        ])
    })?;
    let path_string = config_path.display().to_string();
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(vec![format!("--config {path_string}: {e}")]))?;
    let mut cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(vec![format!("{path_string}: {e}")]))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.display().to_string());
    }
    cfg.validate().map_err(CliError::Config)?;
    if cli.jobs == Some(0) {
        return Err(CliError::Config(vec!["--jobs: need at least 1".into()]));
    }
    let out = PathBuf::from(cfg.out_dir.clone().ok_or_else(|| {
        CliError::Config(vec!["out_dir: set it in the config or pass --out".into()])
    })?);
    *error_dir = Some(out.clone());
    fs::create_dir_all(&out)?;
    let jobs = cli.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let command = cli.command.name();
    let config_sha256 = sha256_hex(text.as_bytes());
    write_json(
        &out.join("manifest.json"),
        &Manifest {
            tool: "annulus",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_path: path_string.clone(),
            config_sha256: config_sha256.clone(),
            seed: cfg.seed,
            jobs,
            swept: None,
            config: &cfg,
        },
    )?;
    info!("{command}: writing to {}", out.display());
    let ctx = Ctx {
        cfg: &cfg,
        out: &out,
        jobs,
        config_path: path_string,
        config_sha256,
    };
    match cli.command {
        Cmd::Sweep => cmd_sweep(&ctx),
        single => dispatch_single(single.name(), &ctx),
    }
}
