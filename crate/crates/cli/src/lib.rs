//! `dosesim` command-line pipeline: phantom generation, dose degradation,
//! image metrics, radiomics extraction, model training, bootstrap
//! evaluation and statistical comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use dosesim_core::degrade::DegradeMethod;

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "dosesim", version, about = "Low-dose CT simulation and radiomics benchmarking")]
pub struct Cli {
    /// Run configuration JSON (sections: phantom, degrade, metrics, radiomics, train, evaluate, compare).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed overriding every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to the available cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Simple,
    Physics,
}

impl From<MethodArg> for DegradeMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Simple => DegradeMethod::SimpleSinogram,
            MethodArg::Physics => DegradeMethod::PhysicsSinogram,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic thorax dataset with labelled nodules.
    Phantom {
        /// Override the number of subjects.
        #[arg(long)]
        subjects: Option<usize>,
    },
    /// Degrade every volume of a manifest in the sinogram domain.
    Degrade {
        #[arg(long)]
        manifest: PathBuf,
        /// Override the configured degradation method.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Paired and distributional image metrics between two datasets.
    Metrics {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
    },
    /// Extract radiomic features (original and perturbed ROIs).
    Radiomics {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Train and select a model on a feature table.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Row-aligned perturbed feature tables (repeatable).
        #[arg(long)]
        perturbed: Vec<PathBuf>,
    },
    /// Score a feature table with a trained model and bootstrap the metrics.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Method name used in comparisons (defaults to the model's parent directory name).
        #[arg(long)]
        name: Option<String>,
    },
    /// Compare evaluation reports (Friedman, then pairwise Wilcoxon).
    Compare {
        /// Evaluation JSON files.
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
    },
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    if let Command::Phantom { subjects: Some(n) } = cli.command {
        cfg.phantom.n_subjects = n;
    }
    if let Command::Degrade { method: Some(m), .. } = cli.command {
        cfg.degrade.method = m.into();
    }
    cfg.validate()?;
    let seed = cfg.global_seed();
    let out = &cli.out;
    match &cli.command {
        Command::Phantom { .. } => commands::phantom::run(&cfg.phantom, seed, out),
        Command::Degrade { manifest, .. } => commands::degrade::run(manifest, &cfg.degrade, out),
        Command::Metrics { real, generated } => commands::metrics::run(real, generated, &cfg.metrics, seed, out),
        Command::Radiomics { manifest } => commands::radiomics::run(manifest, &cfg.radiomics, seed, out),
        Command::Train { features, perturbed } => commands::train::run(features, perturbed, &cfg.train, seed, out),
        Command::Evaluate { model, features, name } => {
            let name = name.clone().unwrap_or_else(|| {
                model
                    .canonicalize()
                    .ok()
                    .and_then(|p| p.parent().and_then(|d| d.file_name()).map(|s| s.to_string_lossy().into_owned()))
                    .unwrap_or_else(|| "model".into())
            });
            commands::evaluate::run(model, features, &name, &cfg.evaluate, out)
        }
        Command::Compare { inputs } => commands::compare::run(inputs, cfg.compare.alpha, out),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(&cli)
}
