//! Benchmark harness for the relational co-clustering solvers: declarative
//! experiment configs, repeated seeded runs over parameter grids, metric
//! tables, alpha sweeps, and manifold-coefficient exports.

pub mod config;
pub mod harness;

pub use config::{Algorithm, DataSource, ExperimentConfig};
pub use harness::{
    export_mu_histogram, fit_once, gen_synthetic, prepare_data, run_experiment, sweep_alpha,
    ExperimentReport, FitArtifact,
};
