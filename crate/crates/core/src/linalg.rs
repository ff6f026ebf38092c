//! Small dense linear-algebra helpers used by the solvers.
//!
//! The factor matrices are tall and thin, so everything here only ever runs on
//! `c x c` matrices (c = number of clusters). A cyclic Jacobi eigensolver keeps
//! the crate free of LAPACK bindings and works for any [`Scalar`].

use ndarray::{Array1, Array2};

use crate::scalar::Scalar;

/// Elementwise positive part `(|x| + x) / 2`.
pub fn positive_part<T: Scalar>(m: &Array2<T>) -> Array2<T> {
    m.mapv(|x| if x > T::zero() { x } else { T::zero() })
}

/// Elementwise negative part `(|x| - x) / 2`, returned as a nonnegative matrix.
pub fn negative_part<T: Scalar>(m: &Array2<T>) -> Array2<T> {
    m.mapv(|x| if x < T::zero() { -x } else { T::zero() })
}

/// Squared Frobenius norm.
pub fn frobenius_sq<T: Scalar>(m: &Array2<T>) -> T {
    m.iter().map(|&x| x * x).sum()
}

/// `Tr(G^T L G)`, evaluated column by column.
pub fn trace_quad_form<T: Scalar>(l: &Array2<T>, g: &Array2<T>) -> T {
    let lg = l.dot(g);
    g.iter().zip(lg.iter()).map(|(&a, &b)| a * b).sum()
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors in columns, not
/// sorted. Input must be square and (numerically) symmetric.
pub fn sym_eigen<T: Scalar>(a: &Array2<T>) -> (Array1<T>, Array2<T>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen requires a square matrix");
    let mut a = a.clone();
    let mut v = Array2::eye(n);
    if n <= 1 {
        return (a.diag().to_owned(), v);
    }

    let eps = T::epsilon() * T::real(n as f64);
    let norm = frobenius_sq(&a).sqrt().max(T::min_positive_value());
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= eps * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= eps * norm * T::epsilon() {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (T::real(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diag().to_owned(), v)
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
///
/// Eigenvalues below `rel_cutoff * max_eigenvalue` are truncated; the second
/// return value reports whether any truncation happened (rank deficiency).
pub fn sym_pseudo_inverse<T: Scalar>(a: &Array2<T>, rel_cutoff: T) -> (Array2<T>, bool) {
    let (vals, vecs) = sym_eigen(a);
    let max = vals.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let cutoff = max * rel_cutoff;
    let mut truncated = false;
    let n = a.nrows();
    let mut inv = Array2::zeros((n, n));
    for (idx, &lambda) in vals.iter().enumerate() {
        if lambda.abs() <= cutoff || lambda <= T::zero() {
            truncated = true;
            continue;
        }
        let col = vecs.column(idx);
        let w = T::one() / lambda;
        for i in 0..n {
            for j in 0..n {
                inv[[i, j]] += w * col[i] * col[j];
            }
        }
    }
    (inv, truncated)
}
