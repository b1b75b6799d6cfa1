use crate::error::{dim_err, Result};

use super::matrix::Matrix;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with the matching orthonormal
/// eigenvectors as columns. Sweeps visit `(p, q)` pairs row by row, so the
/// result is deterministic. Only the upper triangle is read.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !m.is_square() {
        return dim_err(format!("eigen-decomposition of a {:?} matrix", m.shape()));
    }
    let n = m.rows();
    let mut a = Matrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] });
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    Ok((values, v.select_columns(&order)))
}

/// Applies the two-sided rotation `JᵀAJ` in the `(p, q)` plane.
fn rotate(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
}

/// Truncated symmetric square root of a symmetric positive semidefinite matrix.
///
/// Returns `N` (`t×s`) with `NᵀN ≈ M`, keeping the eigenpairs whose
/// eigenvalue exceeds `tol·σ_max`, where `σ_max` is the largest singular
/// value (largest absolute eigenvalue) of `M`. `t = 0` yields an empty `N`.
pub fn sym_sqrt_truncated(m: &Matrix, tol: f64) -> Result<(Matrix, usize)> {
    let (values, vectors) = symmetric_eigen(m)?;
    let sigma_max = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let (n, kept) = truncated_root(&values, &vectors, tol * sigma_max);
    Ok((n, kept.len()))
}

/// `N = Λ̃^{1/2}Ṽᵀ` over the eigenpairs with eigenvalue `> cutoff`, plus their indices.
pub(crate) fn truncated_root(values: &[f64], vectors: &Matrix, cutoff: f64) -> (Matrix, Vec<usize>) {
    let kept: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l > cutoff && l > 0.0)
        .map(|(i, _)| i)
        .collect();
    let s = vectors.rows();
    let n = Matrix::from_fn(kept.len(), s, |r, c| values[kept[r]].sqrt() * vectors[(c, kept[r])]);
    (n, kept)
}
