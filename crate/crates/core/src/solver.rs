//! Alternating solver for relational multi-manifold co-clustering.
//!
//! Each outer iteration performs, in order: the closed-form update of the
//! middle block `S`, the manifold-coefficient update of `mu` on the simplex,
//! one multiplicative update of the partition blocks `G`, and column
//! normalization with compensation into `S`. The full objective is recorded
//! once per outer iteration and is non-increasing by construction:
//!
//! * the `S` step is the exact unconstrained minimizer,
//! * the `mu` step installs a feasible point no worse than the previous one,
//! * the multiplicative `G` step is the standard descent rule derived from the
//!   KKT complementarity condition with positive/negative part splitting,
//! * normalization rescales only columns with norm >= 1 during the run (the
//!   compensated rescaling then cannot increase the Laplacian trace term);
//!   the returned state is fully normalized after the trace is closed.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::baselines::kmeans;
use crate::error::{Error, Result};
use crate::graph::{build_bank, combine_laplacians, GraphLaplacian, ManifoldBank};
use crate::linalg::{negative_part, positive_part, sym_pseudo_inverse};
use crate::scalar::Scalar;
use crate::simplex::{cda, emda, SimplexProblem};
use crate::types::{
    check_dims, objective_with_combined, FactorState, ObjectiveTrace, RelationalData,
};

/// Which algorithm learns the manifold coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuSolverKind {
    Emda,
    Cda,
}

impl std::fmt::Display for MuSolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MuSolverKind::Emda => write!(f, "emda"),
            MuSolverKind::Cda => write!(f, "cda"),
        }
    }
}

impl std::str::FromStr for MuSolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "emda" => Ok(MuSolverKind::Emda),
            "cda" => Ok(MuSolverKind::Cda),
            other => Err(Error::Config(format!("unknown mu solver '{other}'"))),
        }
    }
}

/// Factor initialization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    KMeans,
    Random,
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct RmcConfig<T: Scalar> {
    pub c1: usize,
    pub c2: usize,
    pub alpha: T,
    pub beta: T,
    pub k_neighbors: usize,
    pub epsilon: T,
    pub max_outer_iters: usize,
    pub mu_solver: MuSolverKind,
    pub init: InitKind,
    pub seed: u64,
}

impl<T: Scalar> RmcConfig<T> {
    /// Defaults: `beta = 0.1 alpha`, 5 neighbors, convergence rate `1e-5`,
    /// at most 500 outer iterations, mirror-descent mu updates, k-means init.
    pub fn new(c1: usize, c2: usize, alpha: T) -> Self {
        Self {
            c1,
            c2,
            alpha,
            beta: alpha * T::real(0.1),
            k_neighbors: 5,
            epsilon: T::real(1e-5),
            max_outer_iters: 500,
            mu_solver: MuSolverKind::Emda,
            init: InitKind::KMeans,
            seed: 0,
        }
    }

    pub fn validate(&self, n1: usize, n2: usize) -> Result<()> {
        if self.c1 == 0 || self.c1 >= n1 || self.c2 == 0 || self.c2 >= n2 {
            return Err(Error::Config(format!(
                "cluster counts (c1={}, c2={}) must satisfy 1 <= c < n for n1={n1}, n2={n2}",
                self.c1, self.c2
            )));
        }
        if !(self.alpha > T::zero()) || !(self.beta > T::zero()) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if !(self.epsilon > T::zero()) || self.max_outer_iters == 0 {
            return Err(Error::Config("epsilon and max_outer_iters must be positive".into()));
        }
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be >= 1".into()));
        }
        Ok(())
    }
}

/// Output of one solver run.
#[derive(Debug, Clone)]
pub struct ClusteringResult<T: Scalar> {
    /// Hard cluster index per sample (row argmax of `G2`).
    pub sample_labels: Vec<usize>,
    /// Hard cluster index per feature (row argmax of `G1`).
    pub feature_labels: Vec<usize>,
    /// Learned manifold coefficients.
    pub mu: Array1<T>,
    /// Objective value per outer iteration.
    pub trace: ObjectiveTrace<T>,
    /// Stationarity residual `max|(alpha L G - A + G B) .* G|` per iteration.
    pub kkt_residuals: Vec<T>,
    /// Whether the relative-change stopping rule fired before the cap.
    pub converged: bool,
    /// Final factors, fully column-normalized with compensation into `S`.
    pub state: FactorState<T>,
}

const PINV_CUTOFF: f64 = 1e-12;
const DENOM_FLOOR: f64 = 1e-12;
const MU_MAX_ITERS: usize = 5000;
const MU_MAX_SWEEPS: usize = 100;
const MU_TOL: f64 = 1e-8;
const INIT_RESTARTS: usize = 10;
const INIT_OFFSET: f64 = 0.2;
const INIT_ATTEMPTS: u64 = 10;

/// Closed-form update of the middle block:
/// `S12 <- (G1^T G1)^+ G1^T R12 G2 (G2^T G2)^+`.
///
/// This is the unconstrained minimizer of the reconstruction term; `S` may go
/// negative. Rank-deficient Gram matrices fall back to the pseudo-inverse
/// with a warning.
pub fn update_s<T: Scalar>(r: &RelationalData<T>, state: &mut FactorState<T>) -> Result<()> {
    check_dims(r, state, None)?;
    let cutoff = T::real(PINV_CUTOFF);
    let (inv1, trunc1) = sym_pseudo_inverse(&state.g1.t().dot(&state.g1), cutoff);
    let (inv2, trunc2) = sym_pseudo_inverse(&state.g2.t().dot(&state.g2), cutoff);
    if trunc1 || trunc2 {
        log::warn!("rank-deficient G^T G; middle block computed via pseudo-inverse");
    }
    let middle = state.g1.t().dot(r.r12()).dot(&state.g2);
    state.s12 = inv1.dot(&middle).dot(&inv2);
    Ok(())
}

/// Per-candidate regularization scores: `s_i = Tr(G1^T Lf_i G1) +
/// Tr(G2^T Ls_i G2)`, one shared coefficient vector across both spaces.
pub fn candidate_scores<T: Scalar>(state: &FactorState<T>, bank: &ManifoldBank<T>) -> Array1<T> {
    Array1::from_iter((0..bank.q()).map(|i| {
        let s = crate::linalg::trace_quad_form(bank.feature()[i].matrix(), &state.g1)
            + crate::linalg::trace_quad_form(bank.sample()[i].matrix(), &state.g2);
        // PSD traces; clip floating-point dust below zero.
        s.max(T::zero())
    }))
}

/// Learns the manifold coefficients by minimizing
/// `sum_i mu_i (alpha s_i) + beta |mu|^2` over the simplex and installs the
/// result. The scores carry the regularization weight `alpha` so that this is
/// exactly the `mu`-slice of the full objective; the previous `mu` is kept
/// whenever the solver's answer would be worse, so the step never ascends.
pub fn update_mu<T: Scalar>(
    state: &mut FactorState<T>,
    bank: &ManifoldBank<T>,
    alpha: T,
    beta: T,
    solver: MuSolverKind,
) -> Result<()> {
    if bank.q() != state.q() {
        return Err(Error::DimensionMismatch(format!(
            "mu has length {} but the bank holds {} candidates",
            state.q(),
            bank.q()
        )));
    }
    if bank.q() == 1 {
        state.mu = Array1::from_elem(1, T::one());
        return Ok(());
    }
    let scores = candidate_scores(state, bank).mapv(|s| s * alpha);
    let problem = SimplexProblem::new(scores, beta)?;
    let tol = T::real(MU_TOL);
    let candidate = match solver {
        MuSolverKind::Emda => emda(&problem, MU_MAX_ITERS, tol),
        MuSolverKind::Cda => cda(&problem, MU_MAX_SWEEPS, tol)?,
    };
    if candidate.objective <= problem.objective(&state.mu) {
        state.mu = candidate.mu;
    }
    Ok(())
}

/// One multiplicative update of the partition blocks:
/// `G <- G .* sqrt[(w L^- G + A^+ + G B^-) ./ (w L^+ G + A^- + G B^+)]`
/// with `A = R G S^T`, `B = S^T G^T G S`, evaluated block-wise per space.
///
/// The Laplacian weight is `w = alpha / 2`: the reconstruction term
/// contributes gradient factors of 4 while `d/dG alpha Tr(G^T L G) = 2 alpha
/// L G`, so this is the splitting rule whose descent property holds for the
/// recorded objective. The blocks are updated in sequence (`G1`, then `G2`
/// against the refreshed `A2`, `B2`), which makes each half-step an exact
/// instance of the quadratic-plus-trace descent lemma.
///
/// Nonnegativity is preserved (zero entries stay zero). Denominators are
/// floored at 1e-12; where numerator and denominator both vanish the entry is
/// already stationary and is left unchanged.
pub fn update_g<T: Scalar>(
    state: &mut FactorState<T>,
    r: &RelationalData<T>,
    lap_feature: &GraphLaplacian<T>,
    lap_sample: &GraphLaplacian<T>,
    alpha: T,
) -> Result<()> {
    check_dims(r, state, None)?;
    let w = alpha / T::real(2.0);
    let gram2 = state.g2.t().dot(&state.g2);
    let a1 = r.r12().dot(&state.g2).dot(&state.s12.t());
    let b1 = state.s12.dot(&gram2).dot(&state.s12.t());
    apply_multiplicative(&mut state.g1, lap_feature, &a1, &b1, w)?;

    let gram1 = state.g1.t().dot(&state.g1);
    let a2 = r.r12().t().dot(&state.g1).dot(&state.s12);
    let b2 = state.s12.t().dot(&gram1).dot(&state.s12);
    apply_multiplicative(&mut state.g2, lap_sample, &a2, &b2, w)?;
    Ok(())
}

fn apply_multiplicative<T: Scalar>(
    g: &mut Array2<T>,
    lap: &GraphLaplacian<T>,
    a: &Array2<T>,
    b: &Array2<T>,
    weight: T,
) -> Result<()> {
    let l = lap.matrix();
    let num = positive_part(a) + &negative_part(l).dot(g).mapv(|x| x * weight)
        + g.dot(&negative_part(b));
    let den = negative_part(a) + &positive_part(l).dot(g).mapv(|x| x * weight)
        + g.dot(&positive_part(b));
    let floor = T::real(DENOM_FLOOR);
    ndarray::Zip::from(g.view_mut())
        .and(&num)
        .and(&den)
        .for_each(|gij, &nu, &de| {
            if nu < floor && de < floor {
                return; // stationary entry
            }
            *gij *= (nu / de.max(floor)).sqrt();
        });
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "partition block became non-finite during the multiplicative update".into(),
        ));
    }
    Ok(())
}

/// Stationarity residual `max_ij |(w L G - A + G B)_ij * G_ij|` over both
/// blocks with `w = alpha / 2`, i.e. the complementarity condition of the
/// objective the solver descends; zero exactly at the multiplicative update's
/// fixed points.
pub fn kkt_residual<T: Scalar>(
    state: &FactorState<T>,
    r: &RelationalData<T>,
    lap_feature: &GraphLaplacian<T>,
    lap_sample: &GraphLaplacian<T>,
    alpha: T,
) -> T {
    let w = alpha / T::real(2.0);
    let gram2 = state.g2.t().dot(&state.g2);
    let gram1 = state.g1.t().dot(&state.g1);
    let a1 = r.r12().dot(&state.g2).dot(&state.s12.t());
    let a2 = r.r12().t().dot(&state.g1).dot(&state.s12);
    let b1 = state.s12.dot(&gram2).dot(&state.s12.t());
    let b2 = state.s12.t().dot(&gram1).dot(&state.s12);
    let block = |g: &Array2<T>, lap: &GraphLaplacian<T>, a: &Array2<T>, b: &Array2<T>| {
        let grad = lap.matrix().dot(g).mapv(|x| x * w) - a + &g.dot(b);
        grad.iter()
            .zip(g.iter())
            .map(|(&gr, &gi)| (gr * gi).abs())
            .fold(T::zero(), |m, x| m.max(x))
    };
    block(&state.g1, lap_feature, &a1, &b1)
        .max(block(&state.g2, lap_sample, &a2, &b2))
}

/// Rescales columns of `G1`/`G2` to unit Euclidean length and compensates the
/// norms into `S12` (`S12 <- N1 S12 N2`), which leaves `G S G^T` unchanged.
///
/// With `expanding_only` set, only columns with norm >= 1 are rescaled; that
/// variant cannot increase the Laplacian trace term and keeps the recorded
/// objective monotone during the run. Zero-norm columns are always left
/// untouched and counted in the return value.
pub fn normalize_columns<T: Scalar>(state: &mut FactorState<T>, expanding_only: bool) -> usize {
    let mut zero_columns = 0;
    let mut scale_block = |g: &mut Array2<T>| -> Vec<T> {
        let mut norms = Vec::with_capacity(g.ncols());
        for mut col in g.columns_mut() {
            let norm = col.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm == T::zero() {
                zero_columns += 1;
                norms.push(T::one());
                continue;
            }
            if expanding_only && norm < T::one() {
                norms.push(T::one());
                continue;
            }
            col.mapv_inplace(|x| x / norm);
            norms.push(norm);
        }
        norms
    };
    let n1 = scale_block(&mut state.g1);
    let n2 = scale_block(&mut state.g2);
    for ((i, j), v) in state.s12.indexed_iter_mut() {
        *v = *v * n1[i] * n2[j];
    }
    if zero_columns > 0 {
        log::warn!("{zero_columns} zero-norm partition columns left unnormalized");
    }
    zero_columns
}

fn indicator_with_offset<T: Scalar>(labels: &[usize], c: usize) -> Array2<T> {
    let offset = T::real(INIT_OFFSET);
    let mut g = Array2::from_elem((labels.len(), c), offset);
    for (row, &l) in labels.iter().enumerate() {
        g[[row, l]] += T::one();
    }
    g
}

fn init_factors<T: Scalar>(
    r: &RelationalData<T>,
    bank_q: usize,
    cfg: &RmcConfig<T>,
    seed: u64,
) -> Result<FactorState<T>> {
    let (g1, g2) = match cfg.init {
        InitKind::KMeans => {
            let samples = kmeans(r.r12(), cfg.c2, INIT_RESTARTS, seed)?;
            let features = kmeans(&r.r12().t().to_owned(), cfg.c1, INIT_RESTARTS, seed ^ 0x9e37)?;
            let occupied = |labels: &[usize], c: usize| {
                let mut seen = vec![false; c];
                for &l in labels {
                    seen[l] = true;
                }
                seen.iter().all(|&s| s)
            };
            if !occupied(&samples.labels, cfg.c2) || !occupied(&features.labels, cfg.c1) {
                return Err(Error::Numerical("empty cluster at initialization".into()));
            }
            (
                indicator_with_offset(&features.labels, cfg.c1),
                indicator_with_offset(&samples.labels, cfg.c2),
            )
        }
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let offset = T::real(INIT_OFFSET);
            let mut random = |rows: usize, cols: usize| {
                Array2::from_shape_fn((rows, cols), |_| offset + T::real(rng.random::<f64>()))
            };
            (random(r.n1(), cfg.c1), random(r.n2(), cfg.c2))
        }
    };
    let mu = Array1::from_elem(bank_q, T::one() / T::real(bank_q as f64));
    FactorState::new(g1, g2, Array2::zeros((cfg.c1, cfg.c2)), mu)
}

fn hard_labels<T: Scalar>(g: &Array2<T>) -> Vec<usize> {
    g.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Runs the full solver with the standard 11-candidate manifold bank built
/// from the data.
pub fn fit<T: Scalar>(r: &RelationalData<T>, cfg: &RmcConfig<T>) -> Result<ClusteringResult<T>> {
    let bank = build_bank(r, cfg.k_neighbors)?;
    fit_with_bank(r, &bank, cfg)
}

/// Runs the full solver against a caller-supplied manifold bank. Single-entry
/// banks degenerate to dual graph-regularized tri-factorization with `mu`
/// pinned at 1.
pub fn fit_with_bank<T: Scalar>(
    r: &RelationalData<T>,
    bank: &ManifoldBank<T>,
    cfg: &RmcConfig<T>,
) -> Result<ClusteringResult<T>> {
    cfg.validate(r.n1(), r.n2())?;
    if bank.feature_dim() != r.n1() || bank.sample_dim() != r.n2() {
        return Err(Error::DimensionMismatch(format!(
            "bank spaces {}x{} do not match data {}x{}",
            bank.feature_dim(),
            bank.sample_dim(),
            r.n1(),
            r.n2()
        )));
    }

    let mut state = None;
    let mut last_err = None;
    for attempt in 0..INIT_ATTEMPTS {
        match init_factors(r, bank.q(), cfg, cfg.seed.wrapping_add(attempt)) {
            Ok(s) => {
                state = Some(s);
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let mut state = state.ok_or_else(|| last_err.unwrap())?;

    let mut trace = ObjectiveTrace::new();
    let mut kkt_residuals = Vec::new();
    let mut converged = false;
    for _iter in 0..cfg.max_outer_iters {
        update_s(r, &mut state)?;
        update_mu(&mut state, bank, cfg.alpha, cfg.beta, cfg.mu_solver)?;
        let lap_feature = combine_laplacians(bank.feature(), &state.mu)?;
        let lap_sample = combine_laplacians(bank.sample(), &state.mu)?;
        update_g(&mut state, r, &lap_feature, &lap_sample, cfg.alpha)?;
        kkt_residuals.push(kkt_residual(&state, r, &lap_feature, &lap_sample, cfg.alpha));
        normalize_columns(&mut state, true);

        let value = objective_with_combined(r, &state, &lap_feature, &lap_sample, cfg.alpha, cfg.beta);
        if !value.is_finite() {
            return Err(Error::Numerical("objective became non-finite".into()));
        }
        debug_assert!(state.validate().is_ok(), "solver invariants violated mid-run");
        let previous = trace.last();
        trace.push(value);
        if let Some(prev) = previous {
            let rel = (value - prev).abs() / prev.abs().max(T::min_positive_value());
            if rel < cfg.epsilon {
                converged = true;
                break;
            }
        }
    }

    // Full normalization for reporting; the objective trace is already closed.
    normalize_columns(&mut state, false);
    Ok(ClusteringResult {
        sample_labels: hard_labels(&state.g2),
        feature_labels: hard_labels(&state.g1),
        mu: state.mu.clone(),
        trace,
        kkt_residuals,
        converged,
        state,
    })
}
