//! Minimization of `f(mu) = sum_i mu_i s_i + beta * |mu|^2` over the unit
//! simplex.
//!
//! Three routes are provided:
//!
//! * [`emda`] — entropic mirror descent: multiplicative-weights updates with
//!   the diminishing step `t_m = sqrt(2 ln q / (m L_f^2))`, `L_f = 2 beta +
//!   |s|_1`. Feasible at every iterate by construction.
//! * [`cda`] — pairwise coordinate descent: each (i, j) pair is minimized
//!   exactly subject to `mu_i + mu_j` fixed, so the objective never increases
//!   and the simplex sum is preserved. Requires `beta > 0`.
//! * [`oracle`] / [`exact_minimizer`] — test oracles. For `beta = 0` the
//!   minimizer is the one-hot vector at the smallest `s_i` (analytic branch).
//!   For `beta > 0` the problem is the Euclidean projection of `-s / (2 beta)`
//!   onto the simplex, solved exactly by the sorting/water-filling method;
//!   `oracle` additionally brute-forces a grid for `q <= 4`.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The per-candidate scores `s` and the regularizer weight `beta`.
#[derive(Debug, Clone)]
pub struct SimplexProblem<T: Scalar> {
    s: Array1<T>,
    beta: T,
}

impl<T: Scalar> SimplexProblem<T> {
    /// Scores must be (numerically) nonnegative: they arise as traces of PSD
    /// quadratic forms, so anything below `-1e-9` is rejected.
    pub fn new(s: Array1<T>, beta: T) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Config("simplex problem needs q >= 1".into()));
        }
        if !beta.is_finite() || beta < T::zero() {
            return Err(Error::Config(format!("beta = {beta} must be >= 0")));
        }
        if s.iter().any(|v| !v.is_finite() || *v < T::real(-1e-9)) {
            return Err(Error::Validation(
                "scores must be finite and nonnegative (PSD traces)".into(),
            ));
        }
        Ok(Self { s, beta })
    }

    pub fn q(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &Array1<T> {
        &self.s
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// `f(mu) = s . mu + beta * |mu|^2`.
    pub fn objective(&self, mu: &Array1<T>) -> T {
        let lin: T = self.s.iter().zip(mu.iter()).map(|(&a, &b)| a * b).sum();
        let sq: T = mu.iter().map(|&m| m * m).sum();
        lin + self.beta * sq
    }
}

/// A feasible point, its objective value, and the iterations spent.
#[derive(Debug, Clone)]
pub struct SimplexSolution<T: Scalar> {
    pub mu: Array1<T>,
    pub objective: T,
    pub iterations: usize,
}

fn uniform<T: Scalar>(q: usize) -> Array1<T> {
    Array1::from_elem(q, T::one() / T::real(q as f64))
}

#[cfg(debug_assertions)]
fn debug_check_feasible<T: Scalar>(mu: &Array1<T>) {
    let sum: T = mu.iter().copied().sum();
    debug_assert!(
        (sum - T::one()).abs() <= T::feasibility_tol(1e-9),
        "iterate left the simplex: sum = {sum}"
    );
    debug_assert!(mu.iter().all(|&m| m >= T::zero()), "negative coordinate");
}

#[cfg(not(debug_assertions))]
fn debug_check_feasible<T: Scalar>(_mu: &Array1<T>) {}

/// Entropic mirror descent from the uniform start.
///
/// Stops when the infinity-norm change of an update falls below `tol` or after
/// `max_iters` iterations.
pub fn emda<T: Scalar>(problem: &SimplexProblem<T>, max_iters: usize, tol: T) -> SimplexSolution<T> {
    let q = problem.q();
    if q == 1 {
        let mu = Array1::from_elem(1, T::one());
        let objective = problem.objective(&mu);
        return SimplexSolution {
            mu,
            objective,
            iterations: 0,
        };
    }
    let beta = problem.beta();
    let s = problem.s();
    let l1: T = s.iter().map(|v| v.abs()).sum();
    let lipschitz = T::real(2.0) * beta + l1;
    if lipschitz == T::zero() {
        // f is constant zero; every feasible point is optimal.
        let mu = uniform(q);
        let objective = problem.objective(&mu);
        return SimplexSolution {
            mu,
            objective,
            iterations: 0,
        };
    }

    let two_ln_q = T::real(2.0 * (q as f64).ln());
    let mut mu = uniform::<T>(q);
    let mut iterations = 0;
    for m in 1..=max_iters {
        iterations = m;
        let step = (two_ln_q / T::real(m as f64)).sqrt() / lipschitz;
        // Exponent arguments are shifted by their maximum before exp; the
        // normalized update is shift-invariant, so this only prevents overflow.
        let mut args = Array1::zeros(q);
        let mut max_arg = T::neg_infinity();
        for i in 0..q {
            let grad = T::real(2.0) * beta * mu[i] + s[i];
            let a = -step * grad;
            args[i] = a;
            if a > max_arg {
                max_arg = a;
            }
        }
        let mut next = Array1::zeros(q);
        let mut z = T::zero();
        for i in 0..q {
            let v = mu[i] * (args[i] - max_arg).exp();
            next[i] = v;
            z += v;
        }
        let mut change = T::zero();
        for i in 0..q {
            next[i] /= z;
            change = change.max((next[i] - mu[i]).abs());
        }
        mu = next;
        debug_check_feasible(&mu);
        if change < tol {
            break;
        }
    }
    let objective = problem.objective(&mu);
    SimplexSolution {
        mu,
        objective,
        iterations,
    }
}

/// Pairwise coordinate descent over ordered pairs (i, j), i < j.
///
/// Each pair update is the exact minimizer of `f` with `sigma = mu_i + mu_j`
/// held fixed, so `f` never increases. Stops when a full sweep changes `mu` by
/// less than `tol` in the infinity norm, or after `max_sweeps` sweeps.
/// Requires `q >= 2` and `beta > 0` (the interior branch divides by `4 beta`).
pub fn cda<T: Scalar>(
    problem: &SimplexProblem<T>,
    max_sweeps: usize,
    tol: T,
) -> Result<SimplexSolution<T>> {
    let q = problem.q();
    if q < 2 {
        return Err(Error::Config("coordinate descent needs q >= 2".into()));
    }
    let beta = problem.beta();
    if beta <= T::zero() {
        return Err(Error::Config(
            "coordinate descent needs beta > 0; use emda or the analytic one-hot solution".into(),
        ));
    }
    let s = problem.s();
    let two = T::real(2.0);
    let four = T::real(4.0);
    let mut mu = uniform::<T>(q);
    let mut sweeps_done = 0;
    for sweep in 1..=max_sweeps {
        sweeps_done = sweep;
        let mut change = T::zero();
        for i in 0..q {
            for j in (i + 1)..q {
                let sigma = mu[i] + mu[j];
                let (ni, nj) = if two * beta * sigma + (s[j] - s[i]) <= T::zero() {
                    (T::zero(), sigma)
                } else if two * beta * sigma + (s[i] - s[j]) <= T::zero() {
                    (sigma, T::zero())
                } else {
                    let vi = (two * beta * sigma + (s[j] - s[i])) / (four * beta);
                    (vi, sigma - vi)
                };
                change = change.max((ni - mu[i]).abs()).max((nj - mu[j]).abs());
                mu[i] = ni;
                mu[j] = nj;
            }
        }
        debug_check_feasible(&mu);
        if change < tol {
            break;
        }
    }
    let objective = problem.objective(&mu);
    Ok(SimplexSolution {
        mu,
        objective,
        iterations: sweeps_done,
    })
}

/// One-hot vector at the smallest score (ties toward the lower index).
fn one_hot_at_argmin<T: Scalar>(problem: &SimplexProblem<T>) -> SimplexSolution<T> {
    let s = problem.s();
    let mut best = 0;
    for i in 1..s.len() {
        if s[i] < s[best] {
            best = i;
        }
    }
    let mut mu = Array1::zeros(s.len());
    mu[best] = T::one();
    let objective = problem.objective(&mu);
    SimplexSolution {
        mu,
        objective,
        iterations: 0,
    }
}

/// Exact minimizer from the KKT conditions.
///
/// For `beta > 0`, `f(mu) = beta * |mu - v|^2 + const` with `v = -s / (2 beta)`,
/// so the solution is the Euclidean projection of `v` onto the simplex
/// (water-filling over the active set, found by sorting). For `beta = 0` the
/// optimum sits at a vertex: one-hot at the smallest score.
pub fn exact_minimizer<T: Scalar>(problem: &SimplexProblem<T>) -> SimplexSolution<T> {
    let beta = problem.beta();
    if beta == T::zero() {
        return one_hot_at_argmin(problem);
    }
    let v: Vec<T> = problem
        .s()
        .iter()
        .map(|&si| -si / (T::real(2.0) * beta))
        .collect();
    let mut sorted = v.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite scores"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    let mut rho = 0;
    for (k, &vk) in sorted.iter().enumerate() {
        cumsum += vk;
        let candidate = (cumsum - T::one()) / T::real((k + 1) as f64);
        if vk - candidate > T::zero() {
            theta = candidate;
            rho = k + 1;
        }
    }
    debug_assert!(rho >= 1);
    let mu = Array1::from_iter(v.iter().map(|&vi| (vi - theta).max(T::zero())));
    // Absorb rounding so the sum is exactly 1 to working precision.
    let sum: T = mu.iter().copied().sum();
    let mu = mu.mapv(|m| m / sum);
    let objective = problem.objective(&mu);
    SimplexSolution {
        mu,
        objective,
        iterations: rho,
    }
}

/// Enumerates `mu = k / m` over all integer compositions of `m` into `q`
/// parts and returns the best point found.
fn grid_minimum<T: Scalar>(problem: &SimplexProblem<T>, divisions: usize) -> SimplexSolution<T> {
    let q = problem.q();
    let m = divisions.max(1);
    let inv = T::one() / T::real(m as f64);
    let mut point = vec![0usize; q];
    let mut best_point = vec![0usize; q];
    let mut best = T::infinity();
    let mut evaluated = 0usize;
    // Depth-first walk over compositions without recursion.
    fn walk<T: Scalar>(
        problem: &SimplexProblem<T>,
        inv: T,
        point: &mut Vec<usize>,
        idx: usize,
        remaining: usize,
        best: &mut T,
        best_point: &mut Vec<usize>,
        evaluated: &mut usize,
    ) {
        if idx + 1 == point.len() {
            point[idx] = remaining;
            let mu = Array1::from_iter(point.iter().map(|&k| T::real(k as f64) * inv));
            let f = problem.objective(&mu);
            *evaluated += 1;
            if f < *best {
                *best = f;
                best_point.copy_from_slice(point);
            }
            return;
        }
        for k in 0..=remaining {
            point[idx] = k;
            walk(
                problem,
                inv,
                point,
                idx + 1,
                remaining - k,
                best,
                best_point,
                evaluated,
            );
        }
    }
    walk(
        problem,
        inv,
        &mut point,
        0,
        m,
        &mut best,
        &mut best_point,
        &mut evaluated,
    );
    let mu = Array1::from_iter(best_point.iter().map(|&k| T::real(k as f64) * inv));
    SimplexSolution {
        mu,
        objective: best,
        iterations: evaluated,
    }
}

/// Brute-force oracle.
///
/// `beta = 0` returns the analytic one-hot solution exactly. For `q <= 4` a
/// full grid at the requested `resolution` is enumerated and cross-checked
/// against the exact projection (the better of the two is returned, so the
/// result is within resolution-dependent slack of optimal in every case); for
/// larger `q` the exact projection alone is used.
pub fn oracle<T: Scalar>(problem: &SimplexProblem<T>, resolution: T) -> SimplexSolution<T> {
    if problem.beta() == T::zero() {
        return one_hot_at_argmin(problem);
    }
    let exact = exact_minimizer(problem);
    if problem.q() > 4 {
        return exact;
    }
    let divisions = (T::one() / resolution.max(T::real(1e-6)))
        .ceil()
        .to_usize()
        .unwrap_or(1000)
        .clamp(1, 2000);
    let grid = grid_minimum(problem, divisions);
    if grid.objective < exact.objective {
        grid
    } else {
        exact
    }
}
