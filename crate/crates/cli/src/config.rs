//! Run configuration: command-line flags overlaid by an optional config file
//! and the `SUPERINT_SEED` environment variable.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that overrides the seed from flags and config file.
pub const SEED_ENV: &str = "SUPERINT_SEED";
pub const DEFAULT_SEED: u64 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum V1Mode {
    Generic,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LatexObject {
    Expr,
    Hamiltonian,
    L2,
    System,
    Conditions,
    Final,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    /// `g2 = 4/3`, `g3 = 8/27`, `a1 = hbar^2/3` on `[0.45, pi - 0.45]`.
    Trigonometric,
}

/// Numeric parameters of `numcheck`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g3: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u20: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a4: Option<f64>,
    /// Preset lattice; excludes explicit `g2`, `g3`, `a1`.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
    /// Factor applied to the potential `v2`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturb: Option<f64>,
    /// Sampling interval in `u2`, as `a,b`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Relative and absolute integration tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    /// Constant value of `U2` on the Painleve branch.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u2_value: Option<f64>,
}

/// Finite-difference commutator study of `numcheck`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Set to `false` by `--no-grid`.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    /// Node counts per axis of the ladder, coarse to fine.
    #[arg(long = "grid-nodes", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    /// Accuracy order of the centred stencils.
    #[arg(long = "fd-order")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_order: Option<usize>,
    #[arg(long = "test-functions")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_functions: Option<usize>,
    /// Interval in `u1`, as `a,b`.
    #[arg(long = "grid-u1", value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u1: Option<Vec<f64>>,
    /// Free candidate constants.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a3: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a5: Option<f64>,
}

impl GridConfig {
    fn is_empty(&self) -> bool {
        self == &GridConfig::default()
    }
}

impl NumericConfig {
    fn is_empty(&self) -> bool {
        self == &NumericConfig::default()
    }
}

/// Output destinations and format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Report destination; standard output when absent.
    #[arg(long = "out", global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Additional LaTeX rendering of the result.
    #[arg(long = "latex", global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latex: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// Complete run configuration. Every field is optional so that flags and
/// config files can be overlaid; defaults are filled per command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v1: Option<V1Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object: Option<LatexObject>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "NumericConfig::is_empty")]
    pub numeric: NumericConfig,
    #[serde(default, skip_serializing_if = "GridConfig::is_empty")]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "OutputConfig::is_empty")]
    pub output: OutputConfig,
}

impl OutputConfig {
    fn is_empty(&self) -> bool {
        self == &OutputConfig::default()
    }
}

/// `base` with every field that `top` sets replaced.
macro_rules! overlay {
    ($base:expr, $top:expr; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Fields set in `file` win over fields set here.
    pub fn overlay(&mut self, file: &RunConfig) {
        overlay!(self, file; command, geometry, case, order, v1, branch, strict, object, expr, seed);
        overlay!(self.numeric, file.numeric; hbar, g2, g3, a1, u20, a4, lattice, perturb, domain, samples, tol, beta1, beta2, u2_value);
        overlay!(self.grid, file.grid; enabled, nodes, fd_order, test_functions, u1, a3, a5);
        overlay!(self.output, file.output; report, latex, format);
    }

    /// Parses a TOML or JSON config file, chosen by extension.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "toml" => toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display()))),
            "json" => serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display()))),
            _ => Err(CliError::Usage(format!("config {}: expected a .toml or .json file", path.display()))),
        }
    }

    /// Applies `SUPERINT_SEED` when set.
    pub fn apply_env(&mut self, value: Option<String>) -> Result<(), CliError> {
        if let Some(v) = value {
            let seed = v.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
            self.seed = Some(seed);
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// Rejects non-finite numeric values and malformed intervals.
pub fn interval(name: &str, v: &[f64]) -> Result<(f64, f64), CliError> {
    match v {
        [a, b] if a.is_finite() && b.is_finite() && a < b => Ok((*a, *b)),
        _ => Err(CliError::Usage(format!("{name} must be two finite numbers a < b, got {v:?}"))),
    }
}

pub fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be finite, got {v}")))
    }
}

pub fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}
