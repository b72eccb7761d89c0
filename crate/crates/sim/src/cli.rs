//! Command-line interface.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use cellfree_core::baseline::BaselineKind;
use cellfree_core::channel::sample_channels;
use cellfree_core::complexity::{complexity_report, ComplexityInputs};
use cellfree_core::scenario::build_frequency_grid;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel_io::write_channels;
use crate::error::{Result, SimError};
use crate::experiment::{complexity_summary, run_experiment, ExperimentKind, ExperimentSpec};
use crate::scenario_file::load_config;

#[derive(Debug, Parser)]
#[command(name = "cellfree-sim", version, about = "Joint precoding experiments for IRS-assisted cell-free networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write its CSV.
    Run(RunArgs),
    /// Print operation counts and the complexity ratio.
    Complexity(ComplexityArgs),
    /// Draw one channel realization and write it as CSV.
    DumpChannels(DumpArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file (TOML); the reference scenario when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// distance_sweep, iteration_trace, csi_sweep, power_sweep,
    /// element_sweep, ee_grid or complexity_report.
    #[arg(long)]
    pub experiment: String,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed; trial t uses seed ^ t
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per sweep point (default 20)
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Comma-separated subset of optimized, random_phase, without_irs,
    /// without_direct_link.
    #[arg(long, value_delimiter = ',')]
    pub baselines: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    /// Scenario file supplying the system counts.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub outer: u64,
    #[arg(long, default_value_t = 35)]
    pub cadmm: u64,
    #[arg(long, default_value_t = 40)]
    pub apg: u64,
    #[arg(long, default_value_t = 5)]
    pub frcg: u64,
    #[arg(long, default_value_t = 15)]
    pub pds_outer: u64,
    #[arg(long, default_value_t = 11)]
    pub pds_active: u64,
    #[arg(long, default_value_t = 15)]
    pub pds_passive: u64,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ComplexityArgs {
    pub fn inputs(&self) -> ComplexityInputs {
        ComplexityInputs {
            outer: self.outer,
            cadmm: self.cadmm,
            apg: self.apg,
            frcg: self.frcg,
            pds_outer: self.pds_outer,
            pds_active: self.pds_active,
            pds_passive: self.pds_passive,
        }
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| SimError::Write { path: path.clone(), source })
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let kind = ExperimentKind::from_name(&args.experiment)
        .ok_or_else(|| SimError::Experiment(format!("unknown experiment {:?}", args.experiment)))?;
    let mut spec = ExperimentSpec::new(kind);
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(v) = &args.values {
        spec.values = v.clone();
    }
    if let Some(names) = &args.baselines {
        spec.baselines = names
            .iter()
            .map(|n| BaselineKind::from_name(n).ok_or_else(|| SimError::Experiment(format!("unknown baseline {n:?}"))))
            .collect::<Result<_>>()?;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Run(args) => {
            let spec = build_spec(args)?;
            let config = load_config(args.config.as_deref(), args.seed)?;
            // open the output before any computation so a bad path fails fast
            let mut out = create(&args.out)?;
            run_experiment(&spec, &config)?.write(&mut out)?;
            out.flush().map_err(|source| SimError::Write { path: args.out.clone(), source })
        }
        Command::Complexity(args) => {
            let config = load_config(args.config.as_deref(), None)?;
            let report = complexity_report(&config.dims, &args.inputs())?;
            stdout
                .write_all(complexity_summary(&report).as_bytes())
                .map_err(|source| SimError::Write { path: "<stdout>".into(), source })
        }
        Command::DumpChannels(args) => {
            let config = load_config(args.config.as_deref(), args.seed)?;
            let mut out = create(&args.out)?;
            let grid = build_frequency_grid(&config)?;
            let chan = sample_channels(&config, &grid, &mut ChaCha8Rng::seed_from_u64(config.rng_seed))?;
            write_channels(&chan, &mut out)?;
            out.flush().map_err(|source| SimError::Write { path: args.out.clone(), source })
        }
    }
}

/// The single-line error report written to stderr on failure.
pub fn error_line(e: &SimError) -> String {
    let msg = e.to_string().replace('"', "'");
    format!("error kind={} message=\"{}\"", e.kind(), msg)
}
