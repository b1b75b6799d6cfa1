use crate::error::{dim_err, PqrError, Result};

use super::matrix::{axpy, dot, Matrix};

/// Matrix whose entries strictly below the main diagonal are exactly zero.
///
/// Rectangular (upper-trapezoidal) shapes are allowed, which covers the
/// row-echelon normalizers produced under deflation.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperTriangular(Matrix);

impl UpperTriangular {
    pub fn new(m: Matrix) -> Result<Self> {
        for j in 0..m.cols() {
            for i in (j + 1)..m.rows() {
                if m[(i, j)] != 0.0 {
                    return Err(PqrError::Format(format!(
                        "entry ({i},{j}) = {} below the diagonal",
                        m[(i, j)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Zeroes everything below the diagonal.
    pub fn from_upper_part(mut m: Matrix) -> Self {
        for j in 0..m.cols() {
            for i in (j + 1)..m.rows() {
                m[(i, j)] = 0.0;
            }
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

impl std::ops::Deref for UpperTriangular {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Upper Cholesky factor `N` with `NᵀN = G` and positive diagonal.
///
/// Only the upper triangle of `G` is read.
pub fn cholesky_upper(g: &Matrix) -> Result<UpperTriangular> {
    if !g.is_square() {
        return dim_err(format!("cholesky of a {:?} matrix", g.shape()));
    }
    let n = g.rows();
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        let rj: Vec<f64> = r.col(j)[..j].to_vec();
        let d = g[(j, j)] - dot(&rj, &rj);
        if !(d > 0.0) || !d.is_finite() {
            return Err(PqrError::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        r[(j, j)] = djj;
        for l in (j + 1)..n {
            let s = g[(j, l)] - dot(&rj, &r.col(l)[..j]);
            r[(j, l)] = s / djj;
        }
    }
    Ok(UpperTriangular(r))
}

/// Solves `Y·N = X` for `Y` with `N` square upper triangular (`Y = X·N⁻¹`).
pub fn solve_upper_right(x: &Matrix, n: &Matrix) -> Result<Matrix> {
    if !n.is_square() || n.rows() != x.cols() {
        return dim_err(format!(
            "X·N⁻¹ with X {:?} and N {:?}",
            x.shape(),
            n.shape()
        ));
    }
    let mut y = x.clone();
    for j in 0..n.cols() {
        for i in 0..j {
            let nij = n[(i, j)];
            if nij != 0.0 {
                let (done, rest) = y.col_pair_mut(i, j);
                axpy(-nij, done, rest);
            }
        }
        let d = n[(j, j)];
        for v in y.col_mut(j) {
            *v /= d;
        }
    }
    Ok(y)
}

/// Householder QR of an arbitrary `rows×cols` matrix without any sign fix-up.
///
/// Returns the thin orthogonal factor (`rows×r`) and the upper-trapezoidal
/// `r×cols` factor, `r = min(rows, cols)`. Used for the small factors on the
/// deflation path and, after canonicalization, as the reference QR.
pub fn householder_qr(a: &Matrix) -> (Matrix, Matrix) {
    let (m, n) = a.shape();
    let r = m.min(n);
    let mut work = a.clone();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(r);
    for j in 0..r {
        let x = &work.col(j)[j..];
        let norm = dot(x, x).sqrt();
        let mut v = x.to_vec();
        if norm == 0.0 {
            vs.push(vec![0.0; m - j]);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vn = dot(&v, &v).sqrt();
        for vi in &mut v {
            *vi /= vn;
        }
        for c in j..n {
            let col = &mut work.col_mut(c)[j..];
            let t = 2.0 * dot(&v, col);
            axpy(-t, &v, col);
        }
        for i in (j + 1)..m {
            work[(i, j)] = 0.0;
        }
        vs.push(v);
    }
    let mut q = Matrix::unit_columns(m, 0..r);
    for (j, v) in vs.iter().enumerate().rev() {
        for c in 0..r {
            let col = &mut q.col_mut(c)[j..];
            let t = 2.0 * dot(v, col);
            axpy(-t, v, col);
        }
    }
    (q, work.row_block(0..r))
}

/// Flips rows of `R` (and the matching columns of `Q`) so that the diagonal is nonnegative.
pub fn canonicalize_signs(q: &mut Matrix, r: &mut Matrix) {
    for i in 0..r.rows().min(r.cols()) {
        if r[(i, i)] < 0.0 {
            for j in 0..r.cols() {
                r[(i, j)] = -r[(i, j)];
            }
            if i < q.cols() {
                for v in q.col_mut(i) {
                    *v = -*v;
                }
            }
        }
    }
}

/// Copy of `R` with every row whose diagonal entry is negative negated.
pub fn canonical_r(r: &Matrix) -> Matrix {
    let mut q = Matrix::zeros(0, 0);
    let mut out = r.clone();
    canonicalize_signs(&mut q, &mut out);
    out
}

/// Textbook Householder QR with `diag(R) >= 0`, the comparison oracle for all solvers.
pub fn reference_qr(a: &Matrix) -> Result<(Matrix, UpperTriangular)> {
    if a.rows() < a.cols() {
        return dim_err(format!("reference QR needs rows >= cols, got {:?}", a.shape()));
    }
    let (mut q, mut r) = householder_qr(a);
    canonicalize_signs(&mut q, &mut r);
    Ok((q, UpperTriangular::from_upper_part(r)))
}
