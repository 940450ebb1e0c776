use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use greenmask_cli::commands;
use greenmask_cli::config::{ExperimentConfig, LoadedConfig};
use greenmask_cli::manifest::MANIFEST_NAME;
use greenmask_cli::CliError;

#[derive(Parser)]
#[command(name = "greenmask", version, about = "Coded-diffraction mask design and phase retrieval experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config or a previous run's manifest.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the TV weight (kernel.alpha for kernel-experiment).
    #[arg(long)]
    alpha: Option<f64>,
    /// Report phase errors without global-phase alignment.
    #[arg(long)]
    no_phase_align: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write masks, sidecars and radial spectra.
    GenerateMasks(Common),
    /// Simulate sensor measurements of the configured target.
    Simulate(Common),
    /// Reconstruct from a simulate output directory.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Simulate output (or bare measurement) directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score a reconstruction against ground truth.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Reconstruct output directory.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Ground-truth sidecar; defaults to truth.json beside the
        /// reconstruction's measurements.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Concurrent cells; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Recover a phase-only defocus kernel with each mask kind.
    KernelExperiment(Common),
}

/// Config from `--config`, else inherited from `inherit/manifest.json`,
/// else defaults; then the flag overrides.
fn resolve(common: &Common, inherit: Option<&Path>, kernel: bool) -> Result<LoadedConfig, CliError> {
    let mut loaded = match (&common.config, inherit.map(|d| d.join(MANIFEST_NAME))) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(m)) if m.is_file() => LoadedConfig {
            input: None,
            ..ExperimentConfig::load(&m)?
        },
        _ => LoadedConfig {
            config: ExperimentConfig::default(),
            input: None,
        },
    };
    let cfg = &mut loaded.config;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(alpha) = common.alpha {
        if kernel {
            cfg.kernel.alpha = alpha;
        } else {
            cfg.solver.alpha = alpha;
        }
    }
    if common.no_phase_align {
        cfg.evaluation.align_phase = false;
    }
    cfg.validate()?;
    Ok(loaded)
}

fn required_input(flag: Option<PathBuf>, loaded: &LoadedConfig) -> Result<PathBuf, CliError> {
    flag.or_else(|| loaded.input.clone())
        .ok_or_else(|| CliError::Validation("--input is required".into()))
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    match cli.command {
        Command::GenerateMasks(c) => commands::generate_masks(&resolve(&c, None, false)?.config, &c.out),
        Command::Simulate(c) => commands::simulate(&resolve(&c, None, false)?.config, &c.out),
        Command::Reconstruct { common, input } => {
            let loaded = resolve(&common, input.as_deref(), false)?;
            let input = required_input(input, &loaded)?;
            commands::reconstruct(&loaded.config, &input, &common.out)
        }
        Command::Evaluate { common, input, truth } => {
            let loaded = resolve(&common, input.as_deref(), false)?;
            let input = required_input(input, &loaded)?;
            let truth = match truth {
                Some(t) => t,
                None => commands::default_truth(&input)?,
            };
            commands::evaluate(&loaded.config, &input, &truth, &common.out)
        }
        Command::Sweep { common, jobs } => {
            commands::sweep(&resolve(&common, None, false)?.config, &common.out, jobs)
        }
        Command::KernelExperiment(c) => commands::kernel_experiment(&resolve(&c, None, true)?.config, &c.out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
