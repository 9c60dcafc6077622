use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gridcert", version, about = "Decentralized frequency-stability certificates for power networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args)]
pub struct GlobalOpts {
    /// Seed for randomized choices.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Frequency grid as `lo,hi,n` (log-spaced, rad/s).
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<(f64, f64, usize)>,
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    #[arg(long, global = true)]
    pub tol_espr: Option<f64>,
    #[arg(long, global = true)]
    pub tol_dc: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_cap: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Grid,
    StateSpace,
}

/// Multiplier selection shared by several commands.
#[derive(Clone, Debug, Args)]
pub struct MultiplierOpts {
    /// `auto`, an inline JSON object `{"T": .., "stages": [[alpha, beta], ..]}`, or a path to one.
    #[arg(long, default_value = "auto")]
    pub multiplier: String,
    /// Shorthand for the first-order multiplier `s/(s+T)`; overrides `--multiplier`.
    #[arg(long = "T")]
    pub t: Option<f64>,
}

/// A single-bus transfer function, inline or taken from a spec file.
#[derive(Clone, Debug, Args)]
pub struct BusSource {
    /// Numerator coefficients, highest power first, comma separated.
    #[arg(long, allow_hyphen_values = true, requires = "p_den")]
    pub p_num: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "p_num")]
    pub p_den: Option<String>,
    /// Network spec to take the bus from (with `--bus`).
    #[arg(long, conflicts_with = "p_num")]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub bus: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a network spec with one shared multiplier.
    Certify {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        multiplier: MultiplierOpts,
        /// Also run the closed-loop eigenvalue oracle (delay-free networks).
        #[arg(long)]
        oracle: bool,
    },
    /// Largest scaling keeping a bus in the multiplier class.
    GammaStar {
        #[command(flatten)]
        source: BusSource,
        #[command(flatten)]
        multiplier: MultiplierOpts,
    },
    /// Margin heat map of an AGC area over (beta, k).
    SweepAgc {
        /// Reference table row, 1-based.
        #[arg(long, default_value_t = 1)]
        row: usize,
        /// Droop constant override.
        #[arg(long)]
        r: Option<f64>,
        /// `lo,hi,n`
        #[arg(long, value_parser = parse_grid, default_value = "0.1,2,40")]
        beta: (f64, f64, usize),
        /// `lo,hi,n`
        #[arg(long, value_parser = parse_grid, default_value = "0.01,100,40")]
        k: (f64, f64, usize),
        #[command(flatten)]
        multiplier: MultiplierOpts,
        /// JSON summary file (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Delay bounds and the half-plane check for droop control with delay.
    DroopDelay {
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        #[arg(long)]
        gamma: f64,
        /// Droop constant (default: the largest admissible).
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        tau: f64,
        /// Half-plane angle in radians.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        alpha: f64,
    },
    /// Build an unstable network around a bus that violates the condition.
    Counterexample {
        #[arg(long, allow_hyphen_values = true)]
        p1_num: String,
        #[arg(long, allow_hyphen_values = true)]
        p1_den: String,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[command(flatten)]
        multiplier: MultiplierOpts,
    },
    /// Time-domain response to a power pulse or step.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Disturbed bus (default: drawn from `--seed`).
        #[arg(long)]
        bus: Option<usize>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        magnitude: f64,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// End of the pulse (default: persistent step).
        #[arg(long)]
        end: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 10)]
        sample_every: usize,
        /// Line-flow CSV file.
        #[arg(long)]
        flows: Option<PathBuf>,
    },
    /// Samples of `gamma g(jw)/(jw)` as CSV.
    NyquistExport {
        #[command(flatten)]
        source: BusSource,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
}

pub fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected lo,hi,n, got {s:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("hi: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("n: {e}"))?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(format!("need 0 < lo < hi and n >= 2, got {s:?}"));
    }
    Ok((lo, hi, n))
}

pub fn parse_coeffs(s: &str) -> Result<Vec<f64>, String> {
    let c = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if c.is_empty() || c.iter().any(|x| !x.is_finite()) {
        return Err(format!("invalid coefficient list {s:?}"));
    }
    Ok(c)
}
