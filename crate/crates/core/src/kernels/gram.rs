use crate::error::{PqrError, Result};
use crate::linalg::{
    cholesky_upper, dot, householder_qr, matmul, solve_upper_right, symmetric_eigen, truncated_root,
    Matrix, UpperTriangular,
};

use super::SolverConfig;

/// Normalizer of a projected block, obtained from its Gram matrix `M = ŨᵀŨ`.
///
/// Either a Cholesky factor, or the truncated symmetric root used on
/// breakdown or when rank detection is requested. In the truncated case
/// `N = WᵀΛ̃^{1/2}Ṽᵀ` (re-triangularized, zero rows below the rank) and
/// `right = ṼΛ̃^{-1/2}W` maps the block to its orthonormal directions.
#[derive(Clone, Debug)]
pub enum GramFactor {
    Cholesky(UpperTriangular),
    Truncated {
        n: UpperTriangular,
        right: Matrix,
        rank: usize,
    },
}

impl GramFactor {
    pub fn normalizer(&self) -> &UpperTriangular {
        match self {
            GramFactor::Cholesky(n) => n,
            GramFactor::Truncated { n, .. } => n,
        }
    }

    pub fn into_normalizer(self) -> UpperTriangular {
        match self {
            GramFactor::Cholesky(n) => n,
            GramFactor::Truncated { n, .. } => n,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            GramFactor::Cholesky(n) => n.cols(),
            GramFactor::Truncated { rank, .. } => *rank,
        }
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.rank()).collect()
    }

    /// `Y·N⁻¹`, or `Y·right` on the truncated path (deflated columns come out zero).
    pub fn apply_inverse(&self, y: &Matrix) -> Result<Matrix> {
        match self {
            GramFactor::Cholesky(n) => solve_upper_right(y, n),
            GramFactor::Truncated { right, .. } => matmul(y, right, false),
        }
    }
}

/// Factors the symmetric `s×s` matrix `m` (`G − PᵀP` or `ŨᵀŨ`).
///
/// `scale` is the largest squared column norm of the incoming block; it only
/// enters the cutoff when `cfg.rank_detection` is set.
pub fn factor_gram(m: &Matrix, scale: f64, cfg: &SolverConfig) -> Result<GramFactor> {
    if !cfg.rank_detection {
        match cholesky_upper(m) {
            Ok(n) => return Ok(GramFactor::Cholesky(n)),
            Err(PqrError::NotPositiveDefinite { .. }) if !cfg.svd_fallback => {
                return Err(PqrError::DeflationNeeded)
            }
            Err(PqrError::NotPositiveDefinite { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    truncated(m, scale, cfg)
}

fn truncated(m: &Matrix, scale: f64, cfg: &SolverConfig) -> Result<GramFactor> {
    let s = m.cols();
    let (values, vectors) = symmetric_eigen(m)?;
    let lmax = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut cutoff = cfg.deflation_tol * lmax;
    if cfg.rank_detection {
        cutoff = cutoff.max(cfg.deflation_tol * scale);
    }
    let (root, kept) = truncated_root(&values, &vectors, cutoff);
    let t = kept.len();
    let right0 = Matrix::from_fn(s, t, |i, r| {
        vectors[(i, kept[r])] / values[kept[r]].sqrt()
    });
    let (w, mut r) = householder_qr(&root);
    let mut right = matmul(&right0, &w, false)?;
    for i in 0..t {
        if r[(i, i)] < 0.0 {
            for j in 0..s {
                r[(i, j)] = -r[(i, j)];
            }
            for v in right.col_mut(i) {
                *v = -*v;
            }
        }
    }
    let mut n = Matrix::zeros(s, s);
    n.set_block(0, 0, &r);
    let mut right_full = Matrix::zeros(s, s);
    right_full.set_block(0, 0, &right);
    Ok(GramFactor::Truncated {
        n: UpperTriangular::from_upper_part(n),
        right: right_full,
        rank: t,
    })
}

/// Largest squared column norm of `x`.
pub(crate) fn max_sq_norm(x: &Matrix) -> f64 {
    (0..x.cols())
        .map(|j| dot(x.col(j), x.col(j)))
        .fold(0.0, f64::max)
}
