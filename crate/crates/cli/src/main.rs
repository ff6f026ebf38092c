use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rmc_cli::config::{default_alpha_grid, Algorithm, DataSource, ExperimentConfig};
use rmc_cli::harness::{
    export_mu_histogram, fit_once, gen_synthetic, prepare_data, run_experiment, sweep_alpha,
    FitArtifact,
};
use rmc_core::ingest::{NoiseKind, PlantedConfig};

/// Co-clustering benchmark tool: tri-factorization with learned manifold
/// ensembles, baselines, and evaluation reports.
#[derive(Parser)]
#[command(name = "rmc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Input matrix file.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Input format: matrix-market | dense-csv | labeled-csv.
    #[arg(long, default_value = "matrix-market")]
    format: String,
    /// Optional ground-truth labels (one integer per line, sample order).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Generate a planted instance instead of reading a file: "n1,n2,c1,c2".
    #[arg(long, value_name = "N1,N2,C1,C2")]
    synthetic: Option<String>,
    /// Noise model for --synthetic: bernoulli | gaussian.
    #[arg(long, default_value = "bernoulli")]
    noise: String,
    /// Noise level (flip probability or standard deviation).
    #[arg(long, default_value_t = 0.1)]
    noise_level: f64,
    /// Seed for the synthetic generator.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn to_source(&self) -> Result<DataSource> {
        if let Some(spec) = &self.synthetic {
            let parts: Vec<usize> = spec
                .split(',')
                .map(|t| t.trim().parse::<usize>().context("parsing --synthetic"))
                .collect::<Result<_>>()?;
            if parts.len() != 4 {
                bail!("--synthetic needs four comma-separated values: n1,n2,c1,c2");
            }
            Ok(DataSource::Synthetic {
                n1: parts[0],
                n2: parts[1],
                c1: parts[2],
                c2: parts[3],
                noise: self.noise.clone(),
                noise_level: self.noise_level,
                seed: self.data_seed,
            })
        } else if let Some(path) = &self.data {
            Ok(DataSource::File {
                path: path.clone(),
                format: self.format.clone(),
                truth: self.truth.clone(),
            })
        } else {
            bail!("provide --data <file> or --synthetic n1,n2,c1,c2");
        }
    }
}

#[derive(Args, Clone)]
struct OverrideArgs {
    /// Experiment config file (TOML). Flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent runs per cell.
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated algorithms: rmc-e,rmc-c,snmtf,kmeans,nmf,gnmf.
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated alpha grid.
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Feature-side cluster count.
    #[arg(long)]
    c1: Option<usize>,
    /// Sample-side cluster count.
    #[arg(long)]
    c2: Option<usize>,
    /// Neighbor count for all graphs.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver fit and write result.json.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// rmc-e | rmc-c
        #[arg(long, default_value = "rmc-e")]
        algorithm: Algorithm,
        #[arg(long)]
        c1: Option<usize>,
        #[arg(long)]
        c2: Option<usize>,
        /// Manifold regularization weight.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Coefficient spread penalty; defaults to 0.1 * alpha.
        #[arg(long)]
        beta: Option<f64>,
        /// Neighbor count for all graphs.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Relative objective change that stops the outer loop.
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "rmc-out")]
        out: PathBuf,
    },
    /// Run the full benchmark grid and write runs.tsv / cells.tsv / summary.txt.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Accuracy/NMI curves over the alpha grid with beta = 0.1 * alpha.
    SweepAlpha {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Export the manifold-coefficient histogram of a saved fit.
    MuHist {
        /// result.json produced by `rmc fit`.
        result: PathBuf,
        /// Output TSV path.
        #[arg(long, default_value = "mu_hist.tsv")]
        out: PathBuf,
    },
    /// Generate a planted co-cluster data set on disk.
    GenSynthetic {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        c1: usize,
        #[arg(long)]
        c2: usize,
        /// bernoulli | gaussian
        #[arg(long, default_value = "bernoulli")]
        noise: String,
        #[arg(long, default_value_t = 0.1)]
        noise_level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "rmc-data")]
        out: PathBuf,
    },
}

fn assemble_config(data: &DataArgs, ov: &OverrideArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &ov.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => {
            let source = data.to_source()?;
            ExperimentConfig {
                name: "experiment".into(),
                data: source,
                c1: None,
                c2: None,
                algorithms: vec![Algorithm::RmcE, Algorithm::RmcC],
                alpha_grid: default_alpha_grid(),
                beta_ratio: 0.1,
                k_neighbors: 5,
                repeats: 20,
                seed: 0,
                epsilon: 1e-5,
                max_outer_iters: 500,
                nmf_iters: 300,
                output_dir: PathBuf::from("rmc-out"),
            }
        }
    };
    // When a config file is present, data flags still win if supplied.
    if ov.config.is_some() && (data.data.is_some() || data.synthetic.is_some()) {
        cfg.data = data.to_source()?;
    }
    if let Some(out) = &ov.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(repeats) = ov.repeats {
        cfg.repeats = repeats;
    }
    if let Some(algos) = &ov.algorithms {
        cfg.algorithms = algos
            .split(',')
            .map(|t| t.trim().parse::<Algorithm>())
            .collect::<Result<_>>()?;
    }
    if let Some(grid) = &ov.alpha_grid {
        cfg.alpha_grid = grid
            .split(',')
            .map(|t| t.trim().parse::<f64>().context("parsing --alpha-grid"))
            .collect::<Result<_>>()?;
    }
    if ov.c1.is_some() {
        cfg.c1 = ov.c1;
    }
    if ov.c2.is_some() {
        cfg.c2 = ov.c2;
    }
    if let Some(k) = ov.k {
        cfg.k_neighbors = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Fit {
            data,
            algorithm,
            c1,
            c2,
            alpha,
            beta,
            k,
            epsilon,
            max_iters,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig {
                name: "fit".into(),
                data: data.to_source()?,
                c1,
                c2,
                algorithms: vec![algorithm],
                alpha_grid: vec![alpha],
                beta_ratio: 0.1,
                k_neighbors: k,
                repeats: 1,
                seed,
                epsilon,
                max_outer_iters: max_iters,
                nmf_iters: 300,
                output_dir: out.clone(),
            };
            let prepared = prepare_data(&cfg)?;
            let artifact = fit_once(&prepared, &cfg, algorithm, alpha, beta, seed)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("result.json");
            std::fs::write(&path, serde_json::to_string_pretty(&artifact)?)?;
            println!(
                "{}: converged={} iterations={} objective={}",
                artifact.algorithm,
                artifact.converged,
                artifact.iterations,
                artifact
                    .objective_trace
                    .last()
                    .map_or("na".to_string(), |v| v.to_string()),
            );
            if let (Some(ac), Some(nmi)) = (artifact.ac, artifact.nmi) {
                println!("accuracy={ac:.4} nmi={nmi:.4}");
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Bench { data, overrides } => {
            let cfg = assemble_config(&data, &overrides)?;
            let report = run_experiment(&cfg)?;
            println!(
                "{} runs, {} cells -> {}",
                report.runs.len(),
                report.cells.len(),
                cfg.output_dir.display()
            );
            for cell in report.cells.iter().filter(|c| c.best) {
                println!(
                    "best {}: alpha={} mean_ac={} mean_nmi={}",
                    cell.algorithm,
                    cell.alpha.map_or("-".into(), |a| a.to_string()),
                    cell.mean_ac.map_or("na".into(), |v| format!("{v:.4}")),
                    cell.mean_nmi.map_or("na".into(), |v| format!("{v:.4}")),
                );
            }
            if !report.all_ok {
                bail!("some cells failed; see runs.tsv");
            }
            Ok(())
        }
        Command::SweepAlpha { data, overrides } => {
            let cfg = assemble_config(&data, &overrides)?;
            let report = sweep_alpha(&cfg)?;
            println!(
                "alpha curve over {} cells -> {}",
                report.cells.len(),
                cfg.output_dir.join("alpha_curve.tsv").display()
            );
            if !report.all_ok {
                bail!("some cells failed; see runs.tsv");
            }
            Ok(())
        }
        Command::MuHist { result, out } => {
            let text = std::fs::read_to_string(&result)
                .with_context(|| format!("reading {}", result.display()))?;
            let artifact: FitArtifact = serde_json::from_str(&text)?;
            export_mu_histogram(&artifact, &out)?;
            println!("wrote {} ({} coefficients)", out.display(), artifact.mu.len());
            Ok(())
        }
        Command::GenSynthetic {
            n1,
            n2,
            c1,
            c2,
            noise,
            noise_level,
            seed,
            out,
        } => {
            let noise = match noise.as_str() {
                "bernoulli" => NoiseKind::Bernoulli { p: noise_level },
                "gaussian" => NoiseKind::Gaussian { sigma: noise_level },
                other => bail!("unknown noise kind '{other}'"),
            };
            let files = gen_synthetic(
                &PlantedConfig {
                    n1,
                    n2,
                    c1,
                    c2,
                    noise,
                    seed,
                },
                &out,
            )?;
            println!("wrote {}", files.matrix.display());
            println!("wrote {}", files.sample_labels.display());
            println!("wrote {}", files.feature_labels.display());
            Ok(())
        }
    }
}
