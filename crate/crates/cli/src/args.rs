use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "nctc", version, about = "Nonconvex completion of low-CP-rank order-3 tensors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a symmetric instance: `Ustar.csv` and an observation directory `obs/`.
    Gen(GenArgs),
    /// Spectral initialization then gradient descent on symmetric observations.
    Complete(CompleteArgs),
    /// Compare an estimate with the ground truth and print `metrics.json`.
    Eval(EvalArgs),
    /// Monte Carlo experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Phase-transition sweep with the proposed and the power-method initialization.
    TpmCompare(ExperimentArgs),
    /// Draw an asymmetric instance: `truth/{U,V,W}.csv` and `obs/`.
    AsymGen(GenArgs),
    /// Asymmetric completion.
    AsymComplete(CompleteArgs),
    /// Asymmetric Monte Carlo experiment.
    AsymExperiment(ExperimentArgs),
}

/// Mode sizes: one value, or three comma-separated values for asym-gen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dims(pub Vec<usize>);

fn parse_dims(s: &str) -> Result<Dims, String> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    match v.len() {
        1 | 3 => Ok(Dims(v)),
        n => Err(format!("expected 1 or 3 sizes, got {n}")),
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_dims)]
    pub d: Dims,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    #[arg(long)]
    pub obs: PathBuf,
    /// Defaults to the rank recorded in the observation manifest.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long = "init-restarts", default_value_t = 5)]
    pub init_restarts: usize,
    /// Retrieval trials per initialization.
    #[arg(long = "L", default_value_t = 16)]
    pub l: usize,
    #[arg(long = "eps-th", default_value_t = 0.4)]
    pub eps_th: f64,
    /// Stepsize relative to the initial factor scale (0.5 symmetric, 1.0 asymmetric).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground truth (`Ustar.csv`, or a directory with U/V/W for asymmetric runs).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long = "success-threshold", default_value_t = 0.01)]
    pub success_threshold: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Estimated factors: a CSV file, or a directory with U/V/W CSVs.
    pub estimate: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long = "success-threshold", default_value_t = 0.01)]
    pub success_threshold: f64,
    /// Also write the metrics to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
}
