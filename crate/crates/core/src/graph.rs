//! k-NN affinity graphs, their Laplacians, and the candidate manifold bank.
//!
//! Objects are columns of the input matrix. For the sample space that is `R12`
//! itself (samples live in feature coordinates); for the feature space it is
//! `R12^T`. Three weighting schemes are supported: binary, heat kernel
//! `exp(-|xi-xj|^2 / t)`, and cosine similarity clamped at zero. Directed k-NN
//! selections are symmetrized by elementwise maximum, ties in neighbor
//! distances break toward the lower object index, and self-loops are excluded.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::RelationalData;

/// Edge weighting scheme for a k-NN graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme<T> {
    Binary,
    /// Heat kernel with bandwidth `t > 0`.
    Heat { t: T },
    Cosine,
}

impl<T: Scalar> std::fmt::Display for WeightScheme<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightScheme::Binary => write!(f, "binary"),
            WeightScheme::Heat { t } => write!(f, "heat(t={t})"),
            WeightScheme::Cosine => write!(f, "cosine"),
        }
    }
}

/// Symmetric nonnegative affinity matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct AffinityMatrix<T: Scalar> {
    pub w: Array2<T>,
    pub scheme: WeightScheme<T>,
    pub k: usize,
}

impl<T: Scalar> AffinityMatrix<T> {
    /// Checks symmetry, zero diagonal, nonnegativity and the per-scheme range.
    pub fn validate(&self) -> Result<()> {
        let n = self.w.nrows();
        if n != self.w.ncols() {
            return Err(Error::DimensionMismatch("affinity matrix must be square".into()));
        }
        for i in 0..n {
            if self.w[[i, i]] != T::zero() {
                return Err(Error::Validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = self.w[[i, j]];
                if v != self.w[[j, i]] {
                    return Err(Error::Validation(format!("asymmetry at ({i},{j})")));
                }
                if v < T::zero() {
                    return Err(Error::Validation(format!("negative weight at ({i},{j})")));
                }
                let in_range = match self.scheme {
                    WeightScheme::Binary => v == T::zero() || v == T::one(),
                    WeightScheme::Heat { .. } | WeightScheme::Cosine => v <= T::one(),
                };
                if !in_range {
                    return Err(Error::Validation(format!(
                        "weight {v} at ({i},{j}) outside the {} range",
                        self.scheme
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Graph Laplacian `L = D - W` with its diagonal degree vector.
#[derive(Debug, Clone)]
pub struct GraphLaplacian<T: Scalar> {
    l: Array2<T>,
    d: Array1<T>,
}

impl<T: Scalar> GraphLaplacian<T> {
    pub fn from_affinity(a: &AffinityMatrix<T>) -> Self {
        let n = a.w.nrows();
        let mut d = Array1::zeros(n);
        for (i, row) in a.w.rows().into_iter().enumerate() {
            d[i] = row.sum();
        }
        let mut l = -a.w.clone();
        for i in 0..n {
            l[[i, i]] += d[i];
        }
        Self { l, d }
    }

    /// Builds from parts; used for convex combinations.
    pub fn from_parts(l: Array2<T>, d: Array1<T>) -> Result<Self> {
        if l.nrows() != l.ncols() || l.nrows() != d.len() {
            return Err(Error::DimensionMismatch("laplacian parts disagree".into()));
        }
        Ok(Self { l, d })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.l
    }

    pub fn degrees(&self) -> &Array1<T> {
        &self.d
    }

    /// Recovers the affinity `W = D - L`.
    pub fn adjacency(&self) -> Array2<T> {
        let mut w = -self.l.clone();
        for i in 0..self.n() {
            w[[i, i]] += self.d[i];
        }
        w
    }

    /// `x^T L x` for a probe vector.
    pub fn quad_form(&self, x: &Array1<T>) -> T {
        let lx = self.l.dot(x);
        x.iter().zip(lx.iter()).map(|(&a, &b)| a * b).sum()
    }

    /// Largest absolute row sum; zero for an exact Laplacian.
    pub fn max_abs_row_sum(&self) -> T {
        self.l
            .rows()
            .into_iter()
            .map(|r| r.sum().abs())
            .fold(T::zero(), |m, x| m.max(x))
    }
}

/// Construction record for one candidate manifold (one entry per bank index;
/// the concrete heat bandwidths differ between the two spaces).
#[derive(Debug, Clone)]
pub struct Provenance<T> {
    pub label: String,
    pub feature_scheme: WeightScheme<T>,
    pub sample_scheme: WeightScheme<T>,
}

/// Ordered list of candidate graph Laplacian pairs, one per space.
#[derive(Debug, Clone)]
pub struct ManifoldBank<T: Scalar> {
    feature: Vec<GraphLaplacian<T>>,
    sample: Vec<GraphLaplacian<T>>,
    provenance: Vec<Provenance<T>>,
}

impl<T: Scalar> ManifoldBank<T> {
    pub fn new(
        feature: Vec<GraphLaplacian<T>>,
        sample: Vec<GraphLaplacian<T>>,
        provenance: Vec<Provenance<T>>,
    ) -> Result<Self> {
        if feature.is_empty() || feature.len() != sample.len() || feature.len() != provenance.len()
        {
            return Err(Error::Config(format!(
                "bank sides must be equal-length and non-empty (feature {}, sample {}, provenance {})",
                feature.len(),
                sample.len(),
                provenance.len()
            )));
        }
        let fd = feature[0].n();
        let sd = sample[0].n();
        if feature.iter().any(|l| l.n() != fd) || sample.iter().any(|l| l.n() != sd) {
            return Err(Error::DimensionMismatch(
                "all candidates on one side must share a dimension".into(),
            ));
        }
        Ok(Self {
            feature,
            sample,
            provenance,
        })
    }

    pub fn q(&self) -> usize {
        self.feature.len()
    }

    pub fn feature(&self) -> &[GraphLaplacian<T>] {
        &self.feature
    }

    pub fn sample(&self) -> &[GraphLaplacian<T>] {
        &self.sample
    }

    pub fn provenance(&self) -> &[Provenance<T>] {
        &self.provenance
    }

    pub fn feature_dim(&self) -> usize {
        self.feature[0].n()
    }

    pub fn sample_dim(&self) -> usize {
        self.sample[0].n()
    }

    pub fn labels(&self) -> Vec<String> {
        self.provenance.iter().map(|p| p.label.clone()).collect()
    }
}

fn validate_points<T: Scalar>(points: &Array2<T>) -> Result<()> {
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("points contain non-finite values".into()));
    }
    Ok(())
}

/// Squared Euclidean distances between all column pairs.
fn pairwise_sq_dists<T: Scalar>(points: &Array2<T>) -> Array2<T> {
    let n = points.ncols();
    let gram = points.t().dot(points);
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let v = gram[[i, i]] + gram[[j, j]] - T::real(2.0) * gram[[i, j]];
            d[[i, j]] = v.max(T::zero());
        }
    }
    d
}

/// Builds the k-NN affinity graph over the columns of `points`.
///
/// An edge (i, j) is kept when j is among the k nearest Euclidean neighbors of
/// i or vice versa (symmetrization by maximum). Requires `n > k >= 1`.
pub fn knn_affinity<T: Scalar>(
    points: &Array2<T>,
    k: usize,
    scheme: WeightScheme<T>,
) -> Result<AffinityMatrix<T>> {
    let n = points.ncols();
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "neighbor count k={k} must satisfy 1 <= k < n={n}"
        )));
    }
    if let WeightScheme::Heat { t } = scheme {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(Error::Config(format!("heat bandwidth t={t} must be positive")));
        }
    }
    validate_points(points)?;

    let dists = pairwise_sq_dists(points);
    let norms: Vec<T> = (0..n)
        .map(|i| points.column(i).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();

    let mut w = Array2::zeros((n, n));
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        // Ties break toward the lower object index for determinism.
        order.sort_by(|&a, &b| {
            dists[[i, a]]
                .partial_cmp(&dists[[i, b]])
                .expect("finite distances")
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            let weight = match scheme {
                WeightScheme::Binary => T::one(),
                WeightScheme::Heat { t } => (-dists[[i, j]] / t).exp(),
                WeightScheme::Cosine => {
                    if norms[i] == T::zero() || norms[j] == T::zero() {
                        log::warn!("zero-norm object under cosine weighting; weight set to 0");
                        T::zero()
                    } else {
                        let dot: T = points
                            .column(i)
                            .iter()
                            .zip(points.column(j).iter())
                            .map(|(&a, &b)| a * b)
                            .sum();
                        (dot / (norms[i] * norms[j])).max(T::zero()).min(T::one())
                    }
                }
            };
            w[[i, j]] = weight;
        }
    }
    // Symmetrize by maximum; preserves the binary {0,1} range.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = w[[i, j]].max(w[[j, i]]);
            w[[i, j]] = m;
            w[[j, i]] = m;
        }
    }
    Ok(AffinityMatrix { w, scheme, k })
}

/// Heat-kernel bandwidth heuristic: the inverse of the mean squared Euclidean
/// distance over all ordered column pairs (including i = j).
pub fn tau_heuristic<T: Scalar>(points: &Array2<T>) -> Result<T> {
    let n = points.ncols();
    if n < 2 {
        return Err(Error::Config("tau heuristic needs at least 2 objects".into()));
    }
    validate_points(points)?;
    // sum_{i,j} |xi - xj|^2 = 2n * sum_i |xi|^2 - 2 |sum_i xi|^2
    let sum_sq: T = points.iter().map(|&x| x * x).sum();
    let col_sum: Array1<T> = points.sum_axis(ndarray::Axis(1));
    let sum_norm_sq: T = col_sum.iter().map(|&x| x * x).sum();
    let nt = T::real(n as f64);
    let total = T::real(2.0) * (nt * sum_sq - sum_norm_sq);
    let mean_sq = total.max(T::zero()) / (nt * nt);
    if mean_sq <= T::zero() {
        return Err(Error::Validation(
            "all objects are identical; heat bandwidth undefined".into(),
        ));
    }
    Ok(T::one() / mean_sq)
}

/// Relative factors of the heat-kernel bandwidth ladder.
pub const HEAT_LADDER: [f64; 9] = [
    1.0 / 100.0,
    1.0 / 60.0,
    1.0 / 30.0,
    1.0 / 10.0,
    1.0,
    10.0,
    30.0,
    60.0,
    100.0,
];

const HEAT_LADDER_LABELS: [&str; 9] = [
    "heat(tau/100)",
    "heat(tau/60)",
    "heat(tau/30)",
    "heat(tau/10)",
    "heat(tau)",
    "heat(10tau)",
    "heat(30tau)",
    "heat(60tau)",
    "heat(100tau)",
];

fn space_candidates<T: Scalar>(
    points: &Array2<T>,
    k: usize,
) -> Result<(Vec<GraphLaplacian<T>>, Vec<WeightScheme<T>>)> {
    let tau = tau_heuristic(points)?;
    let mut laps = Vec::with_capacity(11);
    let mut schemes = Vec::with_capacity(11);
    for factor in HEAT_LADDER {
        let scheme = WeightScheme::Heat {
            t: tau * T::real(factor),
        };
        laps.push(GraphLaplacian::from_affinity(&knn_affinity(points, k, scheme)?));
        schemes.push(scheme);
    }
    for scheme in [WeightScheme::Binary, WeightScheme::Cosine] {
        laps.push(GraphLaplacian::from_affinity(&knn_affinity(points, k, scheme)?));
        schemes.push(scheme);
    }
    Ok((laps, schemes))
}

/// Builds the standard 11-candidate bank for both spaces: nine heat-kernel
/// graphs with bandwidths `tau * {1/100, 1/60, 1/30, 1/10, 1, 10, 30, 60, 100}`
/// (tau computed per space), then one binary and one cosine graph.
pub fn build_bank<T: Scalar>(r: &RelationalData<T>, k: usize) -> Result<ManifoldBank<T>> {
    let sample_points = r.r12();
    let feature_points = r.r12().t().to_owned();
    let (sample, sample_schemes) = space_candidates(sample_points, k)?;
    let (feature, feature_schemes) = space_candidates(&feature_points, k)?;
    let labels = HEAT_LADDER_LABELS
        .iter()
        .map(|s| s.to_string())
        .chain(["binary".to_string(), "cosine".to_string()]);
    let provenance = labels
        .zip(feature_schemes)
        .zip(sample_schemes)
        .map(|((label, fs), ss)| Provenance {
            label,
            feature_scheme: fs,
            sample_scheme: ss,
        })
        .collect();
    ManifoldBank::new(feature, sample, provenance)
}

/// Single-candidate bank with binary-weighted graphs in both spaces; the
/// single-manifold degeneration used by the dual-regularized baselines.
pub fn build_binary_bank<T: Scalar>(r: &RelationalData<T>, k: usize) -> Result<ManifoldBank<T>> {
    let sample =
        GraphLaplacian::from_affinity(&knn_affinity(r.r12(), k, WeightScheme::Binary)?);
    let feature = GraphLaplacian::from_affinity(&knn_affinity(
        &r.r12().t().to_owned(),
        k,
        WeightScheme::Binary,
    )?);
    ManifoldBank::new(
        vec![feature],
        vec![sample],
        vec![Provenance {
            label: "binary".to_string(),
            feature_scheme: WeightScheme::Binary,
            sample_scheme: WeightScheme::Binary,
        }],
    )
}

/// Convex combination `sum_i mu_i L_i` of one side of a bank.
pub fn combine_laplacians<T: Scalar>(
    side: &[GraphLaplacian<T>],
    mu: &Array1<T>,
) -> Result<GraphLaplacian<T>> {
    if side.is_empty() || side.len() != mu.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} candidates vs mu of length {}",
            side.len(),
            mu.len()
        )));
    }
    let sum: T = mu.iter().copied().sum();
    if (sum - T::one()).abs() > T::feasibility_tol(1e-6) || mu.iter().any(|&m| m < T::zero()) {
        return Err(Error::Validation(format!(
            "mu must lie on the unit simplex (sum = {sum})"
        )));
    }
    let n = side[0].n();
    let mut l = Array2::zeros((n, n));
    let mut d = Array1::zeros(n);
    for (lap, &m) in side.iter().zip(mu.iter()) {
        if lap.n() != n {
            return Err(Error::DimensionMismatch("candidate dimensions differ".into()));
        }
        l.scaled_add(m, lap.matrix());
        d.scaled_add(m, lap.degrees());
    }
    GraphLaplacian::from_parts(l, d)
}
