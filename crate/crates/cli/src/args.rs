use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "tnl", version, about = "Time-non-local harmonic oscillator: solve, validate and reproduce figure data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one trajectory and write `trajectory.csv` and `solution.json`.
    Solve(Options),
    /// Run the oracle checks and write `validation.json`.
    Validate(Options),
    /// Write plot-ready data for the single-trajectory and cutoff-sweep figures.
    Figures(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Oracle,
    Appendix,
}

/// `derived` is the re-derived form, `paper` the printed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Derived,
    Paper,
}

/// Every option is also a key of the `--config` JSON file; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub ktilde: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub q0: Option<f64>,
    #[arg(long, conflicts_with = "qbar")]
    pub v0: Option<f64>,
    /// Final position; switches to the two-point problem.
    #[arg(long)]
    pub qbar: Option<f64>,
    #[arg(long = "t-end", allow_hyphen_values = true)]
    #[serde(rename = "t_end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long = "variant-consistency", value_enum)]
    #[serde(rename = "variant_consistency")]
    pub variant_consistency: Option<Variant>,
    #[arg(long = "variant-kernel-order", value_enum)]
    #[serde(rename = "variant_kernel_order")]
    pub variant_kernel_order: Option<Variant>,
    #[arg(long = "variant-hamiltonian", value_enum)]
    #[serde(rename = "variant_hamiltonian")]
    pub variant_hamiltonian: Option<Variant>,
    /// Comma-separated cutoffs for the sweep figure.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gammas: Option<Vec<f64>>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Options {
    /// Fills every unset field from `other`.
    pub fn or(self, other: Options) -> Options {
        Options {
            m: self.m.or(other.m),
            k: self.k.or(other.k),
            ktilde: self.ktilde.or(other.ktilde),
            gamma: self.gamma.or(other.gamma),
            q0: self.q0.or(other.q0),
            v0: self.v0.or(other.v0),
            qbar: self.qbar.or(other.qbar),
            t_end: self.t_end.or(other.t_end),
            n: self.n.or(other.n),
            method: self.method.or(other.method),
            variant_consistency: self.variant_consistency.or(other.variant_consistency),
            variant_kernel_order: self.variant_kernel_order.or(other.variant_kernel_order),
            variant_hamiltonian: self.variant_hamiltonian.or(other.variant_hamiltonian),
            gammas: self.gammas.or(other.gammas),
            jobs: self.jobs.or(other.jobs),
            out: self.out.or(other.out),
            config: self.config.or(other.config),
        }
    }
}
