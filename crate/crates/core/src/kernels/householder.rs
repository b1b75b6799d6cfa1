use crate::basis::ReflectorSeq;
use crate::error::{dim_err, Result};
use crate::linalg::{dot, Matrix, UpperTriangular};

use super::{PassCount, PqrResult, SignConvention, SolverConfig};

/// Householder PQR on a reflector basis.
///
/// The block is reflected by the existing `H_0,…,H_{k−1}`; each new column
/// then gets a reflector that maps its part on the unused rows to a multiple
/// of the first unused row (`σλ`, `σ = −sgn`). The reflectors are appended to `h`.
pub fn householder(h: &mut ReflectorSeq, x: &Matrix, cfg: &SolverConfig) -> Result<PqrResult> {
    let rows = h.rows();
    let k = h.width();
    let s = x.cols();
    if x.rows() != rows {
        return dim_err(format!("block has {} rows, basis has {rows}", x.rows()));
    }
    if rows < k + s {
        return dim_err(format!("{rows} rows cannot hold {} orthonormal columns", k + s));
    }
    let mut work = x.clone();
    h.reflect_forward(0..k, &mut work);
    let p = Matrix::from_fn(k, s, |j, c| h.signs[j] * work[(h.pivots[j], c)]);

    let mut used = vec![false; rows];
    for &r in &h.pivots {
        used[r] = true;
    }
    let mut n = Matrix::zeros(s, s);
    let mut active = Vec::with_capacity(s);
    let mut cursor = 0;
    for i in 0..s {
        for l in 0..i {
            let j = k + l;
            n[(l, i)] = h.signs[j] * work[(h.pivots[j], i)];
        }
        while used[cursor] {
            cursor += 1;
        }
        let pivot = cursor;
        let col = work.col(i);
        let mut v: Vec<f64> = col
            .iter()
            .zip(&used)
            .map(|(&val, &u)| if u { 0.0 } else { val })
            .collect();
        let lambda = dot(&v, &v).sqrt();
        let sigma = if col[pivot] >= 0.0 { -1.0 } else { 1.0 };
        let (diag, sign) = match cfg.sign_convention {
            SignConvention::Householder => (sigma * lambda, 1.0),
            SignConvention::NonNegativeDiagonal => (lambda, sigma),
        };
        n[(i, i)] = diag;

        v[pivot] -= sigma * lambda;
        let norm = dot(&v, &v).sqrt();
        if norm > 0.0 {
            for a in &mut v {
                *a /= norm;
            }
        } else {
            v.iter_mut().for_each(|a| *a = 0.0);
        }

        let deflated = if cfg.rank_detection {
            let scale = dot(x.col(i), x.col(i));
            lambda * lambda <= cfg.deflation_tol * scale
        } else {
            lambda == 0.0
        };
        if !deflated {
            active.push(i);
        }

        h.push(&v, pivot, sign);
        used[pivot] = true;
        let mut rest = work.columns(i + 1..s);
        h.reflect_forward(k + i..k + i + 1, &mut rest);
        work.set_block(0, i + 1, &rest);
    }

    Ok(PqrResult {
        p,
        n: UpperTriangular::from_upper_part(n),
        rank: active.len(),
        active,
        passes: PassCount {
            basis_reads: 2,
            block_reads: 2 * k + s * (s + 1),
            reductions: k + s * (s + 1) / 2,
        },
    })
}
