//! `mlcp`: synthesize instances, run completion or robust PCA, evaluate metrics.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error, 3 the solver hit
//! `max_iter` without converging (suppressed by `--allow-unconverged`).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "mlcp",
    version,
    about = "Low-rank tensor recovery with the minimax logarithmic concave penalty"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random low tubal-rank tensor.
    Synth(SynthArgs),
    /// Complete a tensor from a subset of its entries.
    Complete(CompleteArgs),
    /// Split a tensor into low-rank, sparse and Gaussian parts.
    Denoise(DenoiseArgs),
    /// Compare two tensors with PSNR, SSIM and ERGAS.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Comma-separated extents, e.g. 30,30,20.
    // Fully qualified so clap parses one comma list instead of repeated values.
    #[arg(long, value_parser = parse_shape)]
    shape: std::vec::Vec<usize>,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rescale the result to [0, 1].
    #[arg(long)]
    unit: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Solver settings. Unset flags fall back to the config file, then to the
/// built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct SolverFlags {
    /// `key = value` file with solver and run settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    /// Linearization factor, ρ1 = gamma1 · μ (must exceed 1).
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Factor applied to μ, ρ and τ after every sweep.
    #[arg(long)]
    pub growth: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Pair weights w12,w13,...,w(N-1)N, or `auto` for uniform.
    #[arg(long)]
    pub beta: Option<String>,
    /// Initial weight of the T = L + E + N coupling.
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub tau1: Option<f64>,
    /// Multiplier on the shape-derived default of tau1.
    #[arg(long)]
    pub tau1_scale: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Exact proximal step: compare the objective at zero with the shrunk root.
    #[arg(long)]
    pub strict_prox: bool,
    /// Exit 0 even when the solver stops at max_iter.
    #[arg(long)]
    pub allow_unconverged: bool,
}

#[derive(Args, Debug)]
struct CompleteArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sampling rate in (0, 1]; entries are drawn with --seed.
    #[arg(long, conflicts_with = "mask")]
    sr: Option<f64>,
    /// TNS1 file whose nonzero entries mark observed positions.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ground truth for the metrics table.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Peak value for PSNR/SSIM; defaults to the reference's max |value|.
    #[arg(long)]
    peak: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Salt-and-pepper fraction in [0, 1) added before solving.
    #[arg(long, value_parser = parse_fraction)]
    sp: Option<f64>,
    /// Standard deviation of Gaussian noise added before solving.
    #[arg(long, value_parser = parse_nonneg)]
    gaussian: Option<f64>,
    /// Per-slice salt-and-pepper fraction drawn from U(lo, hi).
    #[arg(long, value_parser = parse_range)]
    noniid: Option<(f64, f64)>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    peak: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Estimate.
    #[arg(long)]
    a: PathBuf,
    /// Reference.
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    peak: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    /// Also write the row to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_shape(s: &str) -> Result<Vec<usize>, String> {
    let dims: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if dims.is_empty() || dims.contains(&0) {
        return Err("extents must be positive".into());
    }
    Ok(dims)
}

pub fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if !(0.0..1.0).contains(&v) {
        return Err(format!("must be in [0, 1), got {v}"));
    }
    Ok(v)
}

pub fn parse_nonneg(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(format!("must be finite and >= 0, got {v}"));
    }
    Ok(v)
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let (lo, hi) = (parse_fraction(lo.trim())?, parse_fraction(hi.trim())?);
    if lo > hi {
        return Err(format!("lo {lo} exceeds hi {hi}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Complete(a) => commands::complete(&a),
        Command::Denoise(a) => commands::denoise(&a),
        Command::Eval(a) => commands::eval(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
