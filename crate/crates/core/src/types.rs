//! Block-structured matrices of the two-type relational model and the shared
//! factorization state.
//!
//! A two-type data set (type-1 objects = features in rows, type-2 objects =
//! samples in columns) is held as the single block `R12`; the full relational
//! matrix `R = [[0, R12], [R12^T, 0]]` is symmetric by construction and is only
//! ever materialized for testing. Likewise the factors are stored as blocks
//! `G = diag(G1, G2)` and `S = [[0, S12], [S12^T, 0]]`, and all solver
//! arithmetic stays block-wise.

use ndarray::{s, Array1, Array2};

use crate::error::{Error, Result};
use crate::graph::{combine_laplacians, GraphLaplacian, ManifoldBank};
use crate::linalg::{frobenius_sq, trace_quad_form};
use crate::scalar::Scalar;

/// Tolerance for the simplex-sum check on `mu`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// The inter-type relational block `R12` (type-1 objects x type-2 objects).
#[derive(Debug, Clone)]
pub struct RelationalData<T: Scalar> {
    r12: Array2<T>,
}

impl<T: Scalar> RelationalData<T> {
    /// Wraps a nonnegative matrix. Rejects negative or non-finite entries.
    pub fn new(r12: Array2<T>) -> Result<Self> {
        if r12.nrows() == 0 || r12.ncols() == 0 {
            return Err(Error::Validation("relational matrix must be non-empty".into()));
        }
        for ((i, j), &v) in r12.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite entry at row {}, column {}",
                    i + 1,
                    j + 1
                )));
            }
            if v < T::zero() {
                return Err(Error::Validation(format!(
                    "negative entry {} at row {}, column {}",
                    v,
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(Self { r12 })
    }

    /// Number of type-1 objects (rows, features).
    pub fn n1(&self) -> usize {
        self.r12.nrows()
    }

    /// Number of type-2 objects (columns, samples).
    pub fn n2(&self) -> usize {
        self.r12.ncols()
    }

    pub fn r12(&self) -> &Array2<T> {
        &self.r12
    }

    pub fn into_inner(self) -> Array2<T> {
        self.r12
    }

    /// Materializes the full `(n1+n2) x (n1+n2)` symmetric relational matrix
    /// `[[0, R12], [R12^T, 0]]`. Test/debug aid; solvers never call this.
    pub fn assemble_full(&self) -> Array2<T> {
        let (n1, n2) = (self.n1(), self.n2());
        let n = n1 + n2;
        let mut full = Array2::zeros((n, n));
        full.slice_mut(s![..n1, n1..]).assign(&self.r12);
        full.slice_mut(s![n1.., ..n1]).assign(&self.r12.t());
        full
    }
}

/// The factorization state: nonnegative partition blocks `G1`, `G2`, the
/// unconstrained middle block `S12`, and the manifold coefficient vector `mu`.
#[derive(Debug, Clone)]
pub struct FactorState<T: Scalar> {
    pub g1: Array2<T>,
    pub g2: Array2<T>,
    pub s12: Array2<T>,
    pub mu: Array1<T>,
}

impl<T: Scalar> FactorState<T> {
    pub fn new(g1: Array2<T>, g2: Array2<T>, s12: Array2<T>, mu: Array1<T>) -> Result<Self> {
        let state = Self { g1, g2, s12, mu };
        state.validate()?;
        Ok(state)
    }

    pub fn c1(&self) -> usize {
        self.g1.ncols()
    }

    pub fn c2(&self) -> usize {
        self.g2.ncols()
    }

    pub fn q(&self) -> usize {
        self.mu.len()
    }

    /// Checks nonnegativity of the partition blocks, simplex feasibility of
    /// `mu`, and block shape consistency.
    pub fn validate(&self) -> Result<()> {
        if self.s12.nrows() != self.c1() || self.s12.ncols() != self.c2() {
            return Err(Error::DimensionMismatch(format!(
                "S12 is {}x{}, expected {}x{}",
                self.s12.nrows(),
                self.s12.ncols(),
                self.c1(),
                self.c2()
            )));
        }
        if self.mu.is_empty() {
            return Err(Error::Validation("mu must have at least one entry".into()));
        }
        if self.g1.iter().chain(self.g2.iter()).any(|&x| x < T::zero()) {
            return Err(Error::Validation("partition blocks must be nonnegative".into()));
        }
        let sum: T = self.mu.iter().copied().sum();
        if (sum - T::one()).abs() > T::feasibility_tol(SIMPLEX_TOL)
            || self.mu.iter().any(|&m| m < T::zero())
        {
            return Err(Error::Validation(format!(
                "mu must lie on the unit simplex (sum = {sum})"
            )));
        }
        Ok(())
    }

    /// True when every column of `G1` and `G2` has unit Euclidean length
    /// within `tol` (zero columns are exempt, they are left untouched by
    /// normalization and flagged there).
    pub fn columns_normalized(&self, tol: T) -> bool {
        let ok = |g: &Array2<T>| {
            g.columns().into_iter().all(|c| {
                let n = c.iter().map(|&x| x * x).sum::<T>().sqrt();
                n == T::zero() || (n - T::one()).abs() <= tol
            })
        };
        ok(&self.g1) && ok(&self.g2)
    }
}

/// Objective values of the full co-clustering objective, one per outer iteration.
#[derive(Debug, Clone, Default)]
pub struct ObjectiveTrace<T> {
    values: Vec<T>,
}

impl<T: Scalar> ObjectiveTrace<T> {
    pub fn new() -> Self {
        Self { values: Vec::new() }
    }

    pub fn push(&mut self, v: T) {
        self.values.push(v);
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn last(&self) -> Option<T> {
        self.values.last().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest relative increase between consecutive entries, or `None` for
    /// traces shorter than 2. A healthy trace stays at or below zero.
    pub fn max_relative_increase(&self) -> Option<T> {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(T::min_positive_value()))
            .fold(None, |acc, x| Some(acc.map_or(x, |a: T| a.max(x))))
    }

    /// True when the trace never increases by more than `rel_tol` relatively.
    pub fn is_non_increasing(&self, rel_tol: T) -> bool {
        self.max_relative_increase().map_or(true, |m| m <= rel_tol)
    }
}

/// Full objective: `|R - G S G^T|_F^2 + alpha * Tr[G^T (sum_i mu_i L_i) G]
/// + beta * |mu|^2`, evaluated block-wise.
pub fn objective<T: Scalar>(
    r: &RelationalData<T>,
    state: &FactorState<T>,
    bank: &ManifoldBank<T>,
    alpha: T,
    beta: T,
) -> Result<T> {
    check_dims(r, state, Some(bank))?;
    let lf = combine_laplacians(bank.feature(), &state.mu)?;
    let ls = combine_laplacians(bank.sample(), &state.mu)?;
    Ok(objective_with_combined(r, state, &lf, &ls, alpha, beta))
}

/// Same as [`objective`] but with the two convex combinations already formed.
pub fn objective_with_combined<T: Scalar>(
    r: &RelationalData<T>,
    state: &FactorState<T>,
    lap_feature: &GraphLaplacian<T>,
    lap_sample: &GraphLaplacian<T>,
    alpha: T,
    beta: T,
) -> T {
    let recon = reconstruction_error(r, state);
    let trace = trace_quad_form(lap_feature.matrix(), &state.g1)
        + trace_quad_form(lap_sample.matrix(), &state.g2);
    let mu_sq: T = state.mu.iter().map(|&m| m * m).sum();
    recon + alpha * trace + beta * mu_sq
}

/// `|R - G S G^T|_F^2 = 2 * |R12 - G1 S12 G2^T|_F^2` by block symmetry.
pub fn reconstruction_error<T: Scalar>(r: &RelationalData<T>, state: &FactorState<T>) -> T {
    let approx = state.g1.dot(&state.s12).dot(&state.g2.t());
    let diff = r.r12() - &approx;
    T::real(2.0) * frobenius_sq(&diff)
}

pub(crate) fn check_dims<T: Scalar>(
    r: &RelationalData<T>,
    state: &FactorState<T>,
    bank: Option<&ManifoldBank<T>>,
) -> Result<()> {
    if state.g1.nrows() != r.n1() || state.g2.nrows() != r.n2() {
        return Err(Error::DimensionMismatch(format!(
            "factors are {}x{} / {}x{} but data has n1={}, n2={}",
            state.g1.nrows(),
            state.c1(),
            state.g2.nrows(),
            state.c2(),
            r.n1(),
            r.n2()
        )));
    }
    if let Some(bank) = bank {
        if bank.feature_dim() != r.n1() || bank.sample_dim() != r.n2() {
            return Err(Error::DimensionMismatch(format!(
                "manifold bank is over {}x{} spaces but data has n1={}, n2={}",
                bank.feature_dim(),
                bank.sample_dim(),
                r.n1(),
                r.n2()
            )));
        }
        if bank.q() != state.q() {
            return Err(Error::DimensionMismatch(format!(
                "mu has length {} but the bank holds {} candidates",
                state.q(),
                bank.q()
            )));
        }
    }
    Ok(())
}
