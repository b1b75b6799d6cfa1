//! Block Gram-Schmidt kernels on explicit bases.
//!
//! The projected block is normalized with CholQR (`N = chol(ŨᵀŨ)`, `U = ŨN⁻¹`),
//! falling back to the truncated root when the Cholesky factorization breaks down.

use crate::error::Result;
use crate::linalg::{axpy, dot, matmul, sub_matmul, Matrix, UpperTriangular};

use super::gram::{factor_gram, max_sq_norm};
use super::{ExplicitStep, PassCount, PqrResult, SolverConfig};

fn cholqr(u_tilde: &Matrix, scale: f64, cfg: &SolverConfig) -> Result<(Matrix, super::GramFactor)> {
    let m = matmul(u_tilde, u_tilde, true)?;
    let f = factor_gram(&m, scale, cfg)?;
    let u = f.apply_inverse(u_tilde)?;
    Ok((u, f))
}

fn finish(p: Matrix, u_tilde: &Matrix, scale: f64, cfg: &SolverConfig, passes: PassCount) -> Result<ExplicitStep> {
    let (u, f) = cholqr(u_tilde, scale, cfg)?;
    let result = PqrResult {
        p,
        rank: f.rank(),
        active: f.active(),
        n: f.into_normalizer(),
        passes,
    };
    Ok(ExplicitStep { result, u })
}

/// Block classical Gram-Schmidt: `P = QᵀX`, `Ũ = X − QP`, then CholQR.
pub fn bcgs(q: &Matrix, x: &Matrix, cfg: &SolverConfig) -> Result<ExplicitStep> {
    let p = matmul(q, x, true)?;
    let u_tilde = sub_matmul(x, q, &p);
    let passes = PassCount {
        basis_reads: 2,
        block_reads: 4,
        reductions: 2,
    };
    finish(p, &u_tilde, max_sq_norm(x), cfg, passes)
}

/// Block modified Gram-Schmidt: one basis column at a time, `P_i = q_iᵀŨ`.
pub fn bmgs(q: &Matrix, x: &Matrix, cfg: &SolverConfig) -> Result<ExplicitStep> {
    let k = q.cols();
    let s = x.cols();
    let mut u_tilde = x.clone();
    let mut p = Matrix::zeros(k, s);
    for i in 0..k {
        let qi = q.col(i);
        for j in 0..s {
            let c = dot(qi, u_tilde.col(j));
            p[(i, j)] = c;
            axpy(-c, qi, u_tilde.col_mut(j));
        }
    }
    let passes = PassCount {
        basis_reads: 1,
        block_reads: 2 * k + 2,
        reductions: k + 1,
    };
    finish(p, &u_tilde, max_sq_norm(x), cfg, passes)
}

/// Two BCGS passes, recombined by [`recombine`].
pub fn bcgs_plus(q: &Matrix, x: &Matrix, cfg: &SolverConfig) -> Result<ExplicitStep> {
    let first = bcgs(q, x, cfg)?;
    let second = bcgs(q, &first.u, &second_pass(cfg))?;
    Ok(recombine(first, second))
}

pub(super) fn second_pass(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        rank_detection: false,
        ..*cfg
    }
}

/// Joins two passes over the same basis: `P = P₁ + P₂N₁`, `N = N₂N₁`, `U = U₂`.
pub fn recombine(first: ExplicitStep, second: ExplicitStep) -> ExplicitStep {
    let (r1, r2) = (first.result, second.result);
    let p = r1
        .p
        .add(&matmul(&r2.p, &r1.n, false).expect("k×s times s×s"))
        .expect("same shape");
    let n = UpperTriangular::from_upper_part(matmul(&r2.n, &r1.n, false).expect("s×s"));
    ExplicitStep {
        result: PqrResult {
            p,
            n,
            rank: r2.rank,
            active: r2.active,
            passes: r1.passes + r2.passes,
        },
        u: second.u,
    }
}
