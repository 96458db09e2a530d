//! Command-line arguments and their validation into a [`RunSpec`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spherint::measure::AtomicMeasure;
use spherint::montecarlo::{Eigensolver, Method};
use spherint::ToleranceConfig;

use crate::table::Format;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "spherint", version, about = "Asymptotics of spherical integrals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of K, H(K), R and the Q∘R round-trip residual over a γ grid.
    Transform(RunArgs),
    /// Limiting free energy, maximizer, regime and second-order prefactor over a θ grid.
    Limit(RunArgs),
    /// Rate function T over an α grid, plus the Legendre cross-check over θ if given.
    Rate(RunArgs),
    /// Monte-Carlo estimates against their deterministic oracles.
    Mc(RunArgs),
    /// Free-convolution additivity and concentration on Haar-rotated sums.
    Freeconv(RunArgs),
    /// Runs the invariant suite; exits 1 on any failure.
    Selftest(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Transform(_) => "transform",
            Command::Limit(_) => "limit",
            Command::Rate(_) => "rate",
            Command::Mc(_) => "mc",
            Command::Freeconv(_) => "freeconv",
            Command::Selftest(_) => "selftest",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Transform(a)
            | Command::Limit(a)
            | Command::Rate(a)
            | Command::Mc(a)
            | Command::Freeconv(a)
            | Command::Selftest(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Jacobi,
    Householder,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Measure file (JSON); repeat for freeconv.
    #[arg(long = "measure", value_name = "FILE")]
    pub measures: Vec<PathBuf>,
    /// θ grid `start:stop:count` (endpoints included).
    #[arg(long, value_name = "A:B:N", allow_hyphen_values = true, conflicts_with = "theta")]
    pub theta_grid: Option<String>,
    /// Explicit θ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    /// γ grid for transform and the R-gap table of freeconv.
    #[arg(long, value_name = "A:B:N", allow_hyphen_values = true, conflicts_with = "gamma")]
    pub gamma_grid: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Option<Vec<f64>>,
    /// α grid for rate (defaults to 21 points across the support).
    #[arg(long, value_name = "A:B:N", allow_hyphen_values = true, conflicts_with = "alpha")]
    pub alpha_grid: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub beta: u8,
    /// Matrix dimension for mc (required) and freeconv (default 400).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Random seed; falls back to SPHERINT_SEED, then 0.
    #[arg(long, env = "SPHERINT_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Tilted)]
    pub method: MethodArg,
    /// mc: estimate the second-order prefactor ratio instead of the log-integral.
    #[arg(long)]
    pub prefactor: bool,
    /// Independent random streams per Monte-Carlo estimate.
    #[arg(long, default_value_t = 8)]
    pub chunks: usize,
    /// freeconv: number of Haar draws.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Jacobi)]
    pub solver: SolverArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// TOML file of tolerance overrides, applied before any --tol.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Tolerance override, e.g. root_abs_tol=1e-10.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    pub tol: Vec<String>,
}

/// Fully resolved inputs of one command.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub measures: Vec<AtomicMeasure>,
    pub thetas: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub beta: u8,
    pub n: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub method: Method,
    pub prefactor: bool,
    pub chunks: usize,
    pub reps: usize,
    pub solver: Eigensolver,
    pub format: Format,
    pub tol: ToleranceConfig,
}

impl RunSpec {
    pub fn thetas(&self) -> Result<&[f64], CliError> {
        self.thetas.as_deref().ok_or_else(|| CliError::Usage("a θ grid is required (--theta or --theta-grid)".into()))
    }

    pub fn gammas(&self) -> Result<&[f64], CliError> {
        self.gammas.as_deref().ok_or_else(|| CliError::Usage("a γ grid is required (--gamma or --gamma-grid)".into()))
    }

    pub fn single_measure(&self) -> Result<&AtomicMeasure, CliError> {
        match self.measures.as_slice() {
            [m] => Ok(m),
            other => Err(CliError::Usage(format!("expected exactly one --measure, got {}", other.len()))),
        }
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid must look like start:stop:count, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { b } else { a + step * i as f64 }).collect())
}

fn grid(grid: &Option<String>, list: &Option<Vec<f64>>) -> Result<Option<Vec<f64>>, CliError> {
    match (grid, list) {
        (Some(g), _) => parse_grid(g).map(Some),
        (None, Some(v)) if v.is_empty() => Err(CliError::Usage("empty value list".into())),
        (None, Some(v)) => {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Usage("grid values must be finite".into()));
            }
            Ok(Some(v.clone()))
        }
        (None, None) => Ok(None),
    }
}

pub fn load_measure(path: &PathBuf) -> Result<AtomicMeasure, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(AtomicMeasure::from_json(&text)?)
}

pub fn load_tolerances(args: &RunArgs) -> Result<ToleranceConfig, CliError> {
    let mut tol = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<ToleranceConfig>(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))?
        }
        None => ToleranceConfig::default(),
    };
    tol.validate()?;
    for kv in &args.tol {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol expects KEY=VAL, got {kv:?}")))?;
        tol.set(k.trim(), v.trim())?;
    }
    Ok(tol)
}

impl RunSpec {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let measures = args.measures.iter().map(load_measure).collect::<Result<Vec<_>, _>>()?;
        Ok(RunSpec {
            measures,
            thetas: grid(&args.theta_grid, &args.theta)?,
            gammas: grid(&args.gamma_grid, &args.gamma)?,
            alphas: grid(&args.alpha_grid, &args.alpha)?,
            beta: args.beta,
            n: args.n,
            samples: args.samples,
            seed: args.seed.unwrap_or(0),
            method: match args.method {
                MethodArg::Direct => Method::Direct,
                MethodArg::Tilted => Method::Tilted,
            },
            prefactor: args.prefactor,
            chunks: args.chunks,
            reps: args.reps,
            solver: match args.solver {
                SolverArg::Jacobi => Eigensolver::Jacobi,
                SolverArg::Householder => Eigensolver::Householder,
            },
            format: args.format,
            tol: load_tolerances(args)?,
        })
    }
}
