//! BCGS with the Pythagorean inner product.

use crate::error::{dim_err, Result};
use crate::linalg::{matmul, sub_matmul, Matrix};

use super::gram::factor_gram;
use super::gram_schmidt::{recombine, second_pass};
use super::{ExplicitStep, PassCount, PqrResult, SolverConfig};

/// The stacked `(k+s)×s` matrix `[QᵀX; XᵀX]` from a single pass over `Q` and `X`.
///
/// Partial results over disjoint row blocks add up to the global matrix,
/// which is what a sum-allreduce exchanges.
pub fn fused_gram(q: &Matrix, x: &Matrix) -> Result<Matrix> {
    let p = matmul(q, x, true)?;
    let g = matmul(x, x, true)?;
    Matrix::vstack(&[&p, &g])
}

/// Second half of BCGS-PIP given the (globally summed) stacked `[P; G]`:
/// `N = chol(G − PᵀP)`, `U = XN⁻¹ − Q(PN⁻¹)`.
///
/// `q` and `x` may be any row block of the global operands; the returned
/// `U` then holds the matching rows.
pub fn pip_normalize(
    q: &Matrix,
    x: &Matrix,
    stacked: &Matrix,
    cfg: &SolverConfig,
) -> Result<(PqrResult, Matrix)> {
    let (k, s) = (q.cols(), x.cols());
    if stacked.shape() != (k + s, s) {
        return dim_err(format!(
            "stacked Gram of shape {:?}, expected {:?}",
            stacked.shape(),
            (k + s, s)
        ));
    }
    let p = stacked.row_block(0..k);
    let g = stacked.row_block(k..k + s);
    let ptp = matmul(&p, &p, true)?;
    let m = g.sub(&ptp)?;
    let scale = g.diag().into_iter().fold(0.0, f64::max);
    let f = factor_gram(&m, scale, cfg)?;
    let u = sub_matmul(&f.apply_inverse(x)?, q, &f.apply_inverse(&p)?);
    let result = PqrResult {
        p,
        rank: f.rank(),
        active: f.active(),
        n: f.into_normalizer(),
        passes: PassCount {
            basis_reads: 2,
            block_reads: 2,
            reductions: 1,
        },
    };
    Ok((result, u))
}

/// BCGS-PIP: one fused Gram pass, one reduction.
pub fn bcgs_pip(q: &Matrix, x: &Matrix, cfg: &SolverConfig) -> Result<ExplicitStep> {
    let stacked = fused_gram(q, x)?;
    let (result, u) = pip_normalize(q, x, &stacked, cfg)?;
    Ok(ExplicitStep { result, u })
}

/// Two BCGS-PIP passes, recombined as in BCGS+.
pub fn bcgs_pip_plus(q: &Matrix, x: &Matrix, cfg: &SolverConfig) -> Result<ExplicitStep> {
    let first = bcgs_pip(q, x, cfg)?;
    let second = bcgs_pip(q, &first.u, &second_pass(cfg))?;
    Ok(recombine(first, second))
}
