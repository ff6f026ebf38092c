//! Declarative experiment configuration: a TOML file plus flag overrides.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::Deserialize;

use rmc_core::ingest::{MatrixFormat, NoiseKind};

/// The algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Manifold-ensemble co-clustering, mirror-descent coefficient updates.
    RmcE,
    /// Manifold-ensemble co-clustering, coordinate-descent coefficient updates.
    RmcC,
    /// Single binary-graph degeneration (dual-regularized tri-factorization).
    Snmtf,
    Kmeans,
    Nmf,
    Gnmf,
}

impl Algorithm {
    pub fn token(&self) -> &'static str {
        match self {
            Algorithm::RmcE => "rmc-e",
            Algorithm::RmcC => "rmc-c",
            Algorithm::Snmtf => "snmtf",
            Algorithm::Kmeans => "kmeans",
            Algorithm::Nmf => "nmf",
            Algorithm::Gnmf => "gnmf",
        }
    }

    /// Whether the algorithm consumes the regularization grid.
    pub fn uses_grid(&self) -> bool {
        !matches!(self, Algorithm::Kmeans | Algorithm::Nmf)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "rmc-e" => Algorithm::RmcE,
            "rmc-c" => Algorithm::RmcC,
            "snmtf" => Algorithm::Snmtf,
            "kmeans" => Algorithm::Kmeans,
            "nmf" => Algorithm::Nmf,
            "gnmf" => Algorithm::Gnmf,
            other => bail!("unknown algorithm '{other}'"),
        })
    }
}

/// Where the data comes from.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    File {
        path: PathBuf,
        /// "matrix-market" | "dense-csv" | "labeled-csv"
        format: String,
        /// Optional label file: one integer class per line, samples in column
        /// order.
        truth: Option<PathBuf>,
    },
    Synthetic {
        n1: usize,
        n2: usize,
        c1: usize,
        c2: usize,
        /// "bernoulli" | "gaussian"
        #[serde(default = "default_noise")]
        noise: String,
        #[serde(default = "default_noise_level")]
        noise_level: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_noise() -> String {
    "bernoulli".into()
}

fn default_noise_level() -> f64 {
    0.1
}

impl DataSource {
    pub fn matrix_format(&self) -> anyhow::Result<Option<MatrixFormat>> {
        match self {
            DataSource::File { format, .. } => Ok(Some(
                MatrixFormat::from_str(format).map_err(anyhow::Error::from)?,
            )),
            DataSource::Synthetic { .. } => Ok(None),
        }
    }

    pub fn noise_kind(&self) -> anyhow::Result<Option<NoiseKind>> {
        match self {
            DataSource::Synthetic {
                noise, noise_level, ..
            } => Ok(Some(match noise.as_str() {
                "bernoulli" => NoiseKind::Bernoulli { p: *noise_level },
                "gaussian" => NoiseKind::Gaussian {
                    sigma: *noise_level,
                },
                other => bail!("unknown noise kind '{other}'"),
            })),
            DataSource::File { .. } => Ok(None),
        }
    }
}

/// The default regularization grid searched by the benchmark.
pub fn default_alpha_grid() -> Vec<f64> {
    vec![0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 500.0, 1500.0]
}

fn default_repeats() -> usize {
    20
}

fn default_beta_ratio() -> f64 {
    0.1
}

fn default_k_neighbors() -> usize {
    5
}

fn default_epsilon() -> f64 {
    1e-5
}

fn default_max_outer_iters() -> usize {
    500
}

fn default_nmf_iters() -> usize {
    300
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::RmcE, Algorithm::RmcC]
}

fn default_name() -> String {
    "experiment".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("rmc-out")
}

/// Full experiment description. Every field has a default except the data
/// source.
#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub data: DataSource,
    /// Feature-side cluster count; defaults to `c2`.
    #[serde(default)]
    pub c1: Option<usize>,
    /// Sample-side cluster count; defaults to the number of truth classes.
    #[serde(default)]
    pub c2: Option<usize>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_beta_ratio")]
    pub beta_ratio: f64,
    #[serde(default = "default_k_neighbors")]
    pub k_neighbors: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_outer_iters")]
    pub max_outer_iters: usize,
    #[serde(default = "default_nmf_iters")]
    pub nmf_iters: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.repeats == 0 {
            bail!("repeats must be >= 1");
        }
        if self.alpha_grid.is_empty() {
            bail!("alpha grid must be non-empty");
        }
        if self.algorithms.is_empty() {
            bail!("algorithm list must be non-empty");
        }
        if self.alpha_grid.iter().any(|&a| !(a > 0.0)) {
            bail!("alpha grid entries must be positive");
        }
        if !(self.beta_ratio > 0.0) {
            bail!("beta ratio must be positive");
        }
        self.data.matrix_format()?;
        self.data.noise_kind()?;
        Ok(())
    }
}
