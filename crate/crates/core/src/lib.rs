//! Co-clustering of two-type relational data (features x samples) by symmetric
//! nonnegative matrix tri-factorization, regularized by a convex combination of
//! candidate graph Laplacians whose weights are learned on the unit simplex.
//!
//! The crate is organized around the solver pipeline:
//!
//! * [`types`] — the relational matrix, factorization state and objective trace.
//! * [`graph`] — k-NN affinity graphs, Laplacians and the candidate manifold bank.
//! * [`simplex`] — minimization of `s·mu + beta*|mu|^2` over the unit simplex
//!   (entropic mirror descent, pairwise coordinate descent, brute-force oracle).
//! * [`solver`] — the alternating tri-factorization solver.
//! * [`baselines`] — k-means, NMF and graph-regularized NMF comparators.
//! * [`metrics`] — clustering accuracy (optimal label matching) and NMI.
//! * [`ingest`] — file loading, preprocessing and synthetic data generation.
//!
//! All numeric kernels are generic over the floating-point type via [`Scalar`];
//! `f64` is the default used by the CLI and the concrete aliases below.

pub mod baselines;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod simplex;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type used by the CLI and the concrete aliases.
pub type Real = f64;

pub type RelationalData64 = types::RelationalData<Real>;
pub type FactorState64 = types::FactorState<Real>;
pub type ManifoldBank64 = graph::ManifoldBank<Real>;
pub type RmcConfig64 = solver::RmcConfig<Real>;
pub type ClusteringResult64 = solver::ClusteringResult<Real>;
pub type Dataset64 = ingest::Dataset<Real>;
