//! Clustering evaluation: accuracy under optimal label matching and
//! normalized mutual information.

use ndarray::Array2;

use crate::error::{Error, Result};

fn check_labels(truth: &[usize], predicted: &[usize]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::Validation("label vectors must be non-empty".into()));
    }
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors have lengths {} and {}",
            truth.len(),
            predicted.len()
        )));
    }
    Ok(())
}

/// Contingency table of cluster co-occurrence counts, padded to square so the
/// assignment step can always build a permutation.
fn contingency(truth: &[usize], predicted: &[usize]) -> Array2<usize> {
    let ct = truth.iter().max().unwrap() + 1;
    let cp = predicted.iter().max().unwrap() + 1;
    let c = ct.max(cp);
    let mut table = Array2::zeros((c, c));
    for (&t, &p) in truth.iter().zip(predicted.iter()) {
        table[[t, p]] += 1;
    }
    table
}

/// Maximum-weight perfect matching on a square nonnegative table
/// (Kuhn-Munkres with potentials, O(n^3)).
fn assignment_max(table: &Array2<usize>) -> usize {
    let n = table.nrows();
    // Convert to a minimization problem.
    let maxw = *table.iter().max().unwrap() as i64;
    let cost = |i: usize, j: usize| maxw - table[[i, j]] as i64;

    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row matched to column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| table[[p[j] - 1, j - 1]]).sum()
}

/// Clustering accuracy: the fraction of objects whose predicted label matches
/// the truth under the best permutation of predicted labels (optimal bipartite
/// assignment on the contingency table).
pub fn accuracy(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    check_labels(truth, predicted)?;
    let table = contingency(truth, predicted);
    let matched = assignment_max(&table);
    Ok(matched as f64 / truth.len() as f64)
}

/// Normalized mutual information with base-2 logarithms and max-entropy
/// normalization. Terms with zero joint probability contribute nothing; when
/// both partitions are single-cluster (both entropies zero) the partitions are
/// identical and the value is defined as 1.
pub fn nmi(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    check_labels(truth, predicted)?;
    let table = contingency(truth, predicted);
    let n = truth.len() as f64;
    let c = table.nrows();
    let row_sums: Vec<f64> = (0..c).map(|i| table.row(i).sum() as f64).collect();
    let col_sums: Vec<f64> = (0..c).map(|j| table.column(j).sum() as f64).collect();

    let entropy = |sums: &[f64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| {
                let p = s / n;
                -p * p.log2()
            })
            .sum()
    };
    let h_truth = entropy(&row_sums);
    let h_pred = entropy(&col_sums);
    let denom = h_truth.max(h_pred);
    if denom == 0.0 {
        return Ok(1.0);
    }

    let mut mi = 0.0;
    for i in 0..c {
        for j in 0..c {
            let joint = table[[i, j]] as f64;
            if joint == 0.0 {
                continue;
            }
            let p = joint / n;
            mi += p * (p / ((row_sums[i] / n) * (col_sums[j] / n))).log2();
        }
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}
