//! Benchmark harness: repeated fits over an algorithm x grid matrix, metric
//! aggregation, and report files.
//!
//! Every emitted number is traceable to (algorithm, dataset, alpha, seed)
//! through `runs.tsv`; re-running with the same configuration reproduces all
//! report files byte for byte. Cells run in parallel and are merged by their
//! (algorithm, grid point, repeat) key, so scheduling cannot affect output.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use rmc_core::baselines::{gnmf, kmeans, nmf};
use rmc_core::graph::{self, GraphLaplacian, ManifoldBank};
use rmc_core::ingest::{
    load_matrix, planted_coclusters, save_matrix_market, Dataset, MatrixFormat, PlantedConfig,
};
use rmc_core::metrics::{accuracy, nmi};
use rmc_core::solver::{fit_with_bank, MuSolverKind, RmcConfig};
use rmc_core::Real;

use crate::config::{Algorithm, DataSource, ExperimentConfig};

const KMEANS_RESTARTS: usize = 20;

/// Loaded data plus the resolved cluster counts.
pub struct PreparedData {
    pub dataset: Dataset<Real>,
    pub c1: usize,
    pub c2: usize,
}

/// Deterministic per-cell seed derivation (splitmix64 over packed indices).
pub fn cell_seed(base: u64, algo: usize, grid: usize, repeat: usize) -> u64 {
    let mut z = base
        ^ ((algo as u64) << 42)
        ^ ((grid as u64) << 21)
        ^ (repeat as u64);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn load_truth_file(path: &Path) -> Result<Vec<usize>> {
    let reader = BufReader::new(
        File::open(path).with_context(|| format!("opening truth file {}", path.display()))?,
    );
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: usize = t
            .parse()
            .with_context(|| format!("{}:{}: invalid label '{t}'", path.display(), idx + 1))?;
        labels.push(v);
    }
    Ok(labels)
}

/// Loads or synthesizes the data set and resolves cluster counts (explicit
/// configuration wins, otherwise the number of truth classes).
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let dataset: Dataset<Real> = match &cfg.data {
        DataSource::File { path, truth, .. } => {
            let format: MatrixFormat = cfg.data.matrix_format()?.unwrap();
            let mut d = load_matrix(path, format)?;
            if let Some(truth_path) = truth {
                let labels = load_truth_file(truth_path)?;
                d = d.with_truth(labels)?;
            }
            d
        }
        DataSource::Synthetic {
            n1,
            n2,
            c1,
            c2,
            seed,
            ..
        } => planted_coclusters(&PlantedConfig {
            n1: *n1,
            n2: *n2,
            c1: *c1,
            c2: *c2,
            noise: cfg.data.noise_kind()?.unwrap(),
            seed: *seed,
        })?,
    };
    let truth_classes = dataset
        .truth
        .as_ref()
        .map(|t| t.iter().max().map_or(0, |m| m + 1));
    let c2 = match (cfg.c2, truth_classes) {
        (Some(c), _) => c,
        (None, Some(c)) if c >= 2 => c,
        _ => bail!("c2 not configured and no usable truth labels to infer it from"),
    };
    let c1 = cfg.c1.unwrap_or(c2);
    Ok(PreparedData { dataset, c1, c2 })
}

/// One fitted cell.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub dataset: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub repeat: usize,
    pub seed: u64,
    pub ac: Option<f64>,
    pub nmi: Option<f64>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// Aggregate over the repeats of one (algorithm, grid point) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub alpha: Option<f64>,
    pub mean_ac: Option<f64>,
    pub std_ac: Option<f64>,
    pub mean_nmi: Option<f64>,
    pub std_nmi: Option<f64>,
    pub ok: usize,
    pub failed: usize,
    /// Best grid point of its algorithm by mean accuracy.
    pub best: bool,
}

pub struct ExperimentReport {
    pub runs: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
    pub all_ok: bool,
}

struct Banks {
    ensemble: Option<ManifoldBank<Real>>,
    single: Option<ManifoldBank<Real>>,
    sample_binary: Option<GraphLaplacian<Real>>,
}

fn build_banks(data: &PreparedData, cfg: &ExperimentConfig) -> Result<Banks> {
    let need_ensemble = cfg
        .algorithms
        .iter()
        .any(|a| matches!(a, Algorithm::RmcE | Algorithm::RmcC));
    let need_single = cfg.algorithms.contains(&Algorithm::Snmtf);
    let need_binary = cfg.algorithms.contains(&Algorithm::Gnmf);
    let r = &data.dataset.data;
    Ok(Banks {
        ensemble: if need_ensemble {
            Some(graph::build_bank(r, cfg.k_neighbors)?)
        } else {
            None
        },
        single: if need_single {
            Some(graph::build_binary_bank(r, cfg.k_neighbors)?)
        } else {
            None
        },
        sample_binary: if need_binary {
            let aff = graph::knn_affinity(r.r12(), cfg.k_neighbors, graph::WeightScheme::Binary)?;
            Some(GraphLaplacian::from_affinity(&aff))
        } else {
            None
        },
    })
}

struct SingleOutcome {
    sample_labels: Vec<usize>,
    objective: Option<f64>,
    iterations: usize,
    converged: bool,
}

fn rmc_config(
    data: &PreparedData,
    cfg: &ExperimentConfig,
    alpha: f64,
    solver: MuSolverKind,
    seed: u64,
) -> RmcConfig<Real> {
    let mut c = RmcConfig::new(data.c1, data.c2, alpha);
    c.beta = cfg.beta_ratio * alpha;
    c.k_neighbors = cfg.k_neighbors;
    c.epsilon = cfg.epsilon;
    c.max_outer_iters = cfg.max_outer_iters;
    c.mu_solver = solver;
    c.seed = seed;
    c
}

fn run_single(
    data: &PreparedData,
    banks: &Banks,
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    alpha: Option<f64>,
    seed: u64,
) -> Result<SingleOutcome> {
    let r = &data.dataset.data;
    match algorithm {
        Algorithm::RmcE | Algorithm::RmcC => {
            let solver = if algorithm == Algorithm::RmcE {
                MuSolverKind::Emda
            } else {
                MuSolverKind::Cda
            };
            let alpha = alpha.expect("grid algorithm without alpha");
            let bank = banks.ensemble.as_ref().expect("ensemble bank not built");
            let res = fit_with_bank(r, bank, &rmc_config(data, cfg, alpha, solver, seed))?;
            Ok(SingleOutcome {
                sample_labels: res.sample_labels.clone(),
                objective: res.trace.last(),
                iterations: res.trace.len(),
                converged: res.converged,
            })
        }
        Algorithm::Snmtf => {
            let alpha = alpha.expect("grid algorithm without alpha");
            let bank = banks.single.as_ref().expect("single bank not built");
            let res = fit_with_bank(r, bank, &rmc_config(data, cfg, alpha, MuSolverKind::Emda, seed))?;
            Ok(SingleOutcome {
                sample_labels: res.sample_labels.clone(),
                objective: res.trace.last(),
                iterations: res.trace.len(),
                converged: res.converged,
            })
        }
        Algorithm::Kmeans => {
            let res = kmeans(r.r12(), data.c2, KMEANS_RESTARTS, seed)?;
            Ok(SingleOutcome {
                sample_labels: res.labels,
                objective: Some(res.inertia),
                iterations: 0,
                converged: true,
            })
        }
        Algorithm::Nmf | Algorithm::Gnmf => {
            let factors = if algorithm == Algorithm::Nmf {
                nmf(r.r12(), data.c2, cfg.nmf_iters, seed)?
            } else {
                let lap = banks.sample_binary.as_ref().expect("binary graph not built");
                let lambda = alpha.expect("grid algorithm without alpha");
                gnmf(r.r12(), data.c2, lap, lambda, cfg.nmf_iters, seed)?
            };
            // Cluster the sample representation rows, as for the embedding
            // baselines: best-of-20 k-means in the low-dimensional space.
            let embedded = factors.v.t().to_owned();
            let km = kmeans(&embedded, data.c2, KMEANS_RESTARTS, cell_seed(seed, 1, 0, 0))?;
            Ok(SingleOutcome {
                sample_labels: km.labels,
                objective: factors.objective.last().copied(),
                iterations: factors.objective.len(),
                converged: true,
            })
        }
    }
}

fn record_for_cell(
    data: &PreparedData,
    banks: &Banks,
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    alpha: Option<f64>,
    repeat: usize,
    seed: u64,
) -> RunRecord {
    let beta = alpha.map(|a| a * cfg.beta_ratio);
    let mut record = RunRecord {
        algorithm: algorithm.token().to_string(),
        dataset: data.dataset.name.clone(),
        alpha,
        beta: if algorithm.uses_grid() { beta } else { None },
        repeat,
        seed,
        ac: None,
        nmi: None,
        objective: None,
        iterations: 0,
        converged: false,
        error: None,
    };
    match run_single(data, banks, cfg, algorithm, alpha, seed) {
        Ok(outcome) => {
            record.objective = outcome.objective;
            record.iterations = outcome.iterations;
            record.converged = outcome.converged;
            if let Some(truth) = &data.dataset.truth {
                record.ac = accuracy(truth, &outcome.sample_labels).ok();
                record.nmi = nmi(truth, &outcome.sample_labels).ok();
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Cell enumeration in configuration order: one entry per
/// (algorithm, grid point, repeat); grid-free algorithms get a single pseudo
/// grid point.
pub fn enumerate_cells(cfg: &ExperimentConfig) -> Vec<(usize, Algorithm, Option<(usize, f64)>, usize)> {
    let mut cells = Vec::new();
    for (ai, &algorithm) in cfg.algorithms.iter().enumerate() {
        let grid: Vec<Option<(usize, f64)>> = if algorithm.uses_grid() {
            cfg.alpha_grid.iter().copied().enumerate().map(Some).collect()
        } else {
            vec![None]
        };
        for g in grid {
            for repeat in 0..cfg.repeats {
                cells.push((ai, algorithm, g, repeat));
            }
        }
    }
    cells
}

/// Runs every (algorithm, grid point, repeat) cell and aggregates.
pub fn run_cells(data: &PreparedData, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let banks = build_banks(data, cfg)?;
    let cells = enumerate_cells(cfg);
    let runs: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(ai, algorithm, g, repeat)| {
            let (gi, alpha) = match g {
                Some((gi, a)) => (gi, Some(a)),
                None => (0, None),
            };
            let seed = cell_seed(cfg.seed, ai, gi, repeat);
            record_for_cell(data, &banks, cfg, algorithm, alpha, repeat, seed)
        })
        .collect();

    // Aggregate per (algorithm index, grid index), preserving order.
    let mut cells_out: Vec<CellSummary> = Vec::new();
    let mut cursor = 0usize;
    for &algorithm in &cfg.algorithms {
        let grid_len = if algorithm.uses_grid() {
            cfg.alpha_grid.len()
        } else {
            1
        };
        let mut algo_cells: Vec<CellSummary> = Vec::new();
        for _ in 0..grid_len {
            let chunk = &runs[cursor..cursor + cfg.repeats];
            cursor += cfg.repeats;
            let ok: Vec<&RunRecord> = chunk.iter().filter(|r| r.error.is_none()).collect();
            let acs: Vec<f64> = ok.iter().filter_map(|r| r.ac).collect();
            let nmis: Vec<f64> = ok.iter().filter_map(|r| r.nmi).collect();
            let (mean_ac, std_ac) = if acs.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&acs);
                (Some(m), Some(s))
            };
            let (mean_nmi, std_nmi) = if nmis.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&nmis);
                (Some(m), Some(s))
            };
            algo_cells.push(CellSummary {
                algorithm: algorithm.token().to_string(),
                alpha: chunk[0].alpha,
                mean_ac,
                std_ac,
                mean_nmi,
                std_nmi,
                ok: ok.len(),
                failed: chunk.len() - ok.len(),
                best: false,
            });
        }
        // Flag the best grid point per algorithm (highest mean accuracy,
        // ties toward the lower grid index).
        if let Some(best_idx) = algo_cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.mean_ac.is_some())
            .max_by(|(ia, a), (ib, b)| {
                a.mean_ac
                    .partial_cmp(&b.mean_ac)
                    .unwrap()
                    .then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
        {
            algo_cells[best_idx].best = true;
        }
        cells_out.extend(algo_cells);
    }

    let all_ok = runs.iter().all(|r| r.error.is_none());
    Ok(ExperimentReport {
        runs,
        cells: cells_out,
        all_ok,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| format!("{x}"))
}

/// Writes `runs.tsv`, `cells.tsv` and `summary.txt` into the output directory.
pub fn write_report(
    dir: &Path,
    cfg: &ExperimentConfig,
    data: &PreparedData,
    report: &ExperimentReport,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut runs = BufWriter::new(File::create(dir.join("runs.tsv"))?);
    writeln!(
        runs,
        "algorithm\tdataset\talpha\tbeta\trepeat\tseed\tac\tnmi\tobjective\titerations\tconverged\tstatus"
    )?;
    for r in &report.runs {
        writeln!(
            runs,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.algorithm,
            r.dataset,
            fmt_opt(r.alpha),
            fmt_opt(r.beta),
            r.repeat,
            r.seed,
            fmt_opt(r.ac),
            fmt_opt(r.nmi),
            fmt_opt(r.objective),
            r.iterations,
            r.converged,
            r.error.as_deref().unwrap_or("ok"),
        )?;
    }
    drop(runs);

    let mut cells = BufWriter::new(File::create(dir.join("cells.tsv"))?);
    writeln!(
        cells,
        "algorithm\talpha\tmean_ac\tstd_ac\tmean_nmi\tstd_nmi\tok\tfailed\tbest"
    )?;
    for c in &report.cells {
        writeln!(
            cells,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.algorithm,
            fmt_opt(c.alpha),
            fmt_opt(c.mean_ac),
            fmt_opt(c.std_ac),
            fmt_opt(c.mean_nmi),
            fmt_opt(c.std_nmi),
            c.ok,
            c.failed,
            c.best,
        )?;
    }
    drop(cells);

    let mut summary = BufWriter::new(File::create(dir.join("summary.txt"))?);
    writeln!(
        summary,
        "experiment: {}  dataset: {} (n1={}, n2={}, c1={}, c2={})",
        cfg.name,
        data.dataset.name,
        data.dataset.data.n1(),
        data.dataset.data.n2(),
        data.c1,
        data.c2
    )?;
    writeln!(summary, "repeats: {}  base seed: {}", cfg.repeats, cfg.seed)?;
    writeln!(summary)?;
    writeln!(
        summary,
        "{:<8} {:>9} {:>9} {:>17} {:>17} {:>5}",
        "algo", "alpha", "ok/fail", "AC mean+-std", "NMI mean+-std", "best"
    )?;
    let pct = |v: Option<f64>, s: Option<f64>| match (v, s) {
        (Some(v), Some(s)) => format!("{:6.2}+-{:5.2}", 100.0 * v, 100.0 * s),
        _ => "na".to_string(),
    };
    for c in &report.cells {
        writeln!(
            summary,
            "{:<8} {:>9} {:>9} {:>17} {:>17} {:>5}",
            c.algorithm,
            c.alpha.map_or("-".to_string(), |a| format!("{a}")),
            format!("{}/{}", c.ok, c.failed),
            pct(c.mean_ac, c.std_ac),
            pct(c.mean_nmi, c.std_nmi),
            if c.best { "*" } else { "" },
        )?;
    }
    Ok(())
}

/// Full benchmark: load, run, write reports.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let report = run_cells(&data, cfg)?;
    write_report(&cfg.output_dir, cfg, &data, &report)?;
    Ok(report)
}

/// Accuracy/NMI-versus-alpha curves (the ensemble solvers by default), with
/// `beta = beta_ratio * alpha` locked. Writes `alpha_curve.tsv` plus the
/// standard report files.
pub fn sweep_alpha(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.algorithms.retain(|a| a.uses_grid());
    if cfg.algorithms.is_empty() {
        bail!("alpha sweep needs at least one grid-searched algorithm");
    }
    cfg.validate()?;
    let data = prepare_data(&cfg)?;
    let report = run_cells(&data, &cfg)?;
    write_report(&cfg.output_dir, &cfg, &data, &report)?;
    let mut curve = BufWriter::new(File::create(cfg.output_dir.join("alpha_curve.tsv"))?);
    writeln!(curve, "algorithm\talpha\tmean_ac\tstd_ac\tmean_nmi\tstd_nmi")?;
    for c in &report.cells {
        writeln!(
            curve,
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.algorithm,
            fmt_opt(c.alpha),
            fmt_opt(c.mean_ac),
            fmt_opt(c.std_ac),
            fmt_opt(c.mean_nmi),
            fmt_opt(c.std_nmi),
        )?;
    }
    Ok(report)
}

/// Serialized single-fit artifact (`result.json`).
#[derive(Debug, Serialize, serde::Deserialize)]
pub struct FitArtifact {
    pub dataset: String,
    pub algorithm: String,
    pub alpha: f64,
    pub beta: f64,
    pub k_neighbors: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub kkt_residuals: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_labels: Vec<String>,
    pub sample_labels: Vec<usize>,
    pub feature_labels: Vec<usize>,
    pub ac: Option<f64>,
    pub nmi: Option<f64>,
}

/// One solver run against the full ensemble bank, packaged for stable
/// serialization.
pub fn fit_once(
    data: &PreparedData,
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    alpha: f64,
    beta: Option<f64>,
    seed: u64,
) -> Result<FitArtifact> {
    let solver = match algorithm {
        Algorithm::RmcE => MuSolverKind::Emda,
        Algorithm::RmcC => MuSolverKind::Cda,
        other => bail!("fit runs the ensemble solver; got '{other}' (use bench for baselines)"),
    };
    let r = &data.dataset.data;
    let bank = graph::build_bank(r, cfg.k_neighbors)?;
    let mut solver_cfg = rmc_config(data, cfg, alpha, solver, seed);
    if let Some(b) = beta {
        solver_cfg.beta = b;
    }
    let res = fit_with_bank(r, &bank, &solver_cfg)?;
    let (ac, nmi_v) = match &data.dataset.truth {
        Some(truth) => (
            Some(accuracy(truth, &res.sample_labels)?),
            Some(nmi(truth, &res.sample_labels)?),
        ),
        None => (None, None),
    };
    Ok(FitArtifact {
        dataset: data.dataset.name.clone(),
        algorithm: algorithm.token().to_string(),
        alpha,
        beta: solver_cfg.beta,
        k_neighbors: cfg.k_neighbors,
        seed,
        converged: res.converged,
        iterations: res.trace.len(),
        objective_trace: res.trace.values().to_vec(),
        kkt_residuals: res.kkt_residuals.clone(),
        mu: res.mu.to_vec(),
        mu_labels: bank.labels(),
        sample_labels: res.sample_labels.clone(),
        feature_labels: res.feature_labels.clone(),
        ac,
        nmi: nmi_v,
    })
}

/// Writes the manifold-coefficient histogram of a fit as plot-ready TSV.
pub fn export_mu_histogram(artifact: &FitArtifact, path: &Path) -> Result<()> {
    if artifact.mu.len() != artifact.mu_labels.len() {
        bail!(
            "artifact holds {} coefficients but {} labels",
            artifact.mu.len(),
            artifact.mu_labels.len()
        );
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "index\tlabel\tweight")?;
    for (i, (label, w)) in artifact.mu_labels.iter().zip(artifact.mu.iter()).enumerate() {
        writeln!(out, "{i}\t{label}\t{w}")?;
    }
    Ok(())
}

/// Files produced by [`gen_synthetic`].
pub struct SyntheticFiles {
    pub matrix: PathBuf,
    pub sample_labels: PathBuf,
    pub feature_labels: PathBuf,
}

/// Generates a planted co-cluster instance and writes it as a Matrix Market
/// file plus one label file per object type.
pub fn gen_synthetic(cfg: &PlantedConfig, dir: &Path) -> Result<SyntheticFiles> {
    fs::create_dir_all(dir)?;
    let d: Dataset<Real> = planted_coclusters(cfg)?;
    let matrix = dir.join("data.mtx");
    save_matrix_market(&matrix, &d.data)?;
    let sample_labels = dir.join("sample_labels.csv");
    let feature_labels = dir.join("feature_labels.csv");
    let write_labels = |path: &Path, labels: &[usize]| -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        for l in labels {
            writeln!(f, "{l}")?;
        }
        Ok(())
    };
    write_labels(&sample_labels, d.truth.as_ref().unwrap())?;
    write_labels(&feature_labels, d.feature_truth.as_ref().unwrap())?;
    Ok(SyntheticFiles {
        matrix,
        sample_labels,
        feature_labels,
    })
}
