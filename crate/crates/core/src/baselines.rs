//! Comparator algorithms: Lloyd's k-means, multiplicative-update NMF, and
//! graph-regularized NMF. Also used for solver initialization and by the
//! benchmark harness.

use ndarray::{Array1, Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::GraphLaplacian;
use crate::linalg::{frobenius_sq, trace_quad_form};
use crate::scalar::Scalar;

const MAX_LLOYD_ITERS: usize = 300;

/// Result of a best-of-restarts k-means run.
#[derive(Debug, Clone)]
pub struct KMeansResult<T: Scalar> {
    /// Cluster index per object.
    pub labels: Vec<usize>,
    /// Centroids in columns (dim x c).
    pub centroids: Array2<T>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: T,
}

fn sq_dist_to<T: Scalar>(points: &Array2<T>, j: usize, centroid: &Array1<T>) -> T {
    points
        .column(j)
        .iter()
        .zip(centroid.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum()
}

fn lloyd<T: Scalar>(points: &Array2<T>, c: usize, rng: &mut ChaCha8Rng) -> KMeansResult<T> {
    let n = points.ncols();
    let dim = points.nrows();
    let init = rand::seq::index::sample(rng, n, c);
    let mut centroids = Array2::zeros((dim, c));
    for (ci, pi) in init.into_iter().enumerate() {
        centroids.column_mut(ci).assign(&points.column(pi));
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERS {
        // Assignment; distance ties break toward the lower centroid index.
        let mut changed = false;
        for j in 0..n {
            let mut best = 0usize;
            let mut best_d = sq_dist_to(points, j, &centroids.column(0).to_owned());
            for ci in 1..c {
                let d = sq_dist_to(points, j, &centroids.column(ci).to_owned());
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            if labels[j] != best {
                labels[j] = best;
                changed = true;
            }
        }
        // Re-seed any empty cluster at the point farthest from its centroid.
        loop {
            let mut counts = vec![0usize; c];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&x| x == 0) else {
                break;
            };
            let farthest = (0..n)
                .max_by(|&a, &b| {
                    let da = sq_dist_to(points, a, &centroids.column(labels[a]).to_owned());
                    let db = sq_dist_to(points, b, &centroids.column(labels[b]).to_owned());
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            labels[farthest] = empty;
            centroids.column_mut(empty).assign(&points.column(farthest));
            changed = true;
        }
        if !changed {
            break;
        }
        // Update step.
        let mut sums = Array2::<T>::zeros((dim, c));
        let mut counts = vec![T::zero(); c];
        for j in 0..n {
            let l = labels[j];
            counts[l] += T::one();
            let mut col = sums.column_mut(l);
            col += &points.column(j);
        }
        for ci in 0..c {
            if counts[ci] > T::zero() {
                let mut col = centroids.column_mut(ci);
                col.assign(&(&sums.column(ci) / counts[ci]));
            }
        }
    }

    let inertia = (0..n)
        .map(|j| sq_dist_to(points, j, &centroids.column(labels[j]).to_owned()))
        .sum();
    KMeansResult {
        labels,
        centroids,
        inertia,
    }
}

/// Lloyd's k-means over the columns of `points` (dim x n), best of `restarts`
/// runs by inertia. Deterministic for a fixed seed.
pub fn kmeans<T: Scalar>(
    points: &Array2<T>,
    c: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansResult<T>> {
    let n = points.ncols();
    if c == 0 || c > n {
        return Err(Error::Config(format!("cluster count c={c} must satisfy 1 <= c <= n={n}")));
    }
    if restarts == 0 {
        return Err(Error::Config("at least one restart required".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("points contain non-finite values".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult<T>> = None;
    for _ in 0..restarts {
        let run = lloyd(points, c, &mut rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Nonnegative factor pair with the objective value per iteration.
#[derive(Debug, Clone)]
pub struct NmfFactors<T: Scalar> {
    /// n x c basis factor.
    pub u: Array2<T>,
    /// m x c coefficient factor (rows are objects of the second mode).
    pub v: Array2<T>,
    /// Objective after each multiplicative update round.
    pub objective: Vec<T>,
}

const DENOM_FLOOR: f64 = 1e-12;

fn multiplicative_nmf<T: Scalar>(
    x: &Array2<T>,
    c: usize,
    graph: Option<(&GraphLaplacian<T>, T)>,
    iters: usize,
    seed: u64,
) -> Result<NmfFactors<T>> {
    if c == 0 {
        return Err(Error::Config("rank c must be positive".into()));
    }
    if x.iter().any(|&v| !v.is_finite() || v < T::zero()) {
        return Err(Error::Validation("matrix must be nonnegative and finite".into()));
    }
    if let Some((lap, lambda)) = graph {
        if lap.n() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "laplacian over {} objects but matrix has {} columns",
                lap.n(),
                x.ncols()
            )));
        }
        if lambda < T::zero() {
            return Err(Error::Config("lambda must be nonnegative".into()));
        }
    }

    let (n, m) = (x.nrows(), x.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = x.sum() / T::real((n * m) as f64);
    let scale = (mean / T::real(c as f64)).sqrt().max(T::real(1e-3));
    let mut u = Array2::from_shape_fn((n, c), |_| scale * T::real(0.05 + 0.95 * rng.random::<f64>()));
    let mut v = Array2::from_shape_fn((m, c), |_| scale * T::real(0.05 + 0.95 * rng.random::<f64>()));

    let floor = T::real(DENOM_FLOOR);
    let (w_adj, degrees) = match graph {
        Some((lap, _)) => (Some(lap.adjacency()), Some(lap.degrees().clone())),
        None => (None, None),
    };
    let eval = |u: &Array2<T>, v: &Array2<T>| -> T {
        let resid = x - &u.dot(&v.t());
        let mut f = frobenius_sq(&resid);
        if let Some((lap, lambda)) = graph {
            f += lambda * trace_quad_form(lap.matrix(), v);
        }
        f
    };

    let mut objective = Vec::with_capacity(iters);
    for _ in 0..iters {
        // U <- U .* (X V) ./ (U V^T V)
        let xv = x.dot(&v);
        let uvtv = u.dot(&v.t().dot(&v));
        ndarray::Zip::from(&mut u).and(&xv).and(&uvtv).for_each(|ui, &num, &den| {
            *ui = *ui * num / den.max(floor);
        });
        // V <- V .* (X^T U + lambda W V) ./ (V U^T U + lambda D V)
        let mut num = x.t().dot(&u);
        let mut den = v.dot(&u.t().dot(&u));
        if let Some((_, lambda)) = graph {
            let w = w_adj.as_ref().unwrap();
            let d = degrees.as_ref().unwrap();
            num = num + w.dot(&v).mapv(|z| z * lambda);
            let mut dv = v.clone();
            for (mut row, &deg) in dv.axis_iter_mut(Axis(0)).zip(d.iter()) {
                row.mapv_inplace(|z| z * lambda * deg);
            }
            den += &dv;
        }
        ndarray::Zip::from(&mut v).and(&num).and(&den).for_each(|vi, &nu, &de| {
            *vi = *vi * nu / de.max(floor);
        });
        objective.push(eval(&u, &v));
    }
    if u.iter().chain(v.iter()).any(|z| !z.is_finite()) {
        return Err(Error::Numerical("NMF factors became non-finite".into()));
    }
    Ok(NmfFactors { u, v, objective })
}

/// Multiplicative-update NMF minimizing `|X - U V^T|_F^2`.
pub fn nmf<T: Scalar>(x: &Array2<T>, c: usize, iters: usize, seed: u64) -> Result<NmfFactors<T>> {
    multiplicative_nmf(x, c, None, iters, seed)
}

/// Graph-regularized NMF minimizing `|X - U V^T|_F^2 + lambda Tr(V^T L V)`,
/// with the graph over the columns of `X`.
pub fn gnmf<T: Scalar>(
    x: &Array2<T>,
    c: usize,
    laplacian: &GraphLaplacian<T>,
    lambda: T,
    iters: usize,
    seed: u64,
) -> Result<NmfFactors<T>> {
    multiplicative_nmf(x, c, Some((laplacian, lambda)), iters, seed)
}
