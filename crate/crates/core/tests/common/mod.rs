#![allow(dead_code)]

use pqr::linalg::{canonical_r, matmul, reference_qr};
use pqr::testmat::{stewart_matrix, StewartSpec};
use pqr::{BasisRep, Kernel, Matrix, PqrResult, Solver, SolverConfig, TsqrPlan};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
    pqr::testmat::gaussian_matrix(rows, cols, &mut rng(seed))
}

pub fn stewart(rows: usize, cols: usize, kappa: f64, seed: u64) -> Matrix {
    stewart_matrix(&StewartSpec::new(rows, cols, kappa, seed)).unwrap()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.sub(b).unwrap().max_abs()
}

/// The blocks `R₁₂` and `R₂₂` of the positive-diagonal QR of `[A₁ X]`.
pub fn oracle_blocks(a1: &Matrix, x: &Matrix) -> (Matrix, Matrix) {
    let k = a1.cols();
    let s = x.cols();
    let (_, r) = reference_qr(&Matrix::hstack(&[a1, x]).unwrap()).unwrap();
    let r = r.as_matrix();
    (r.block(0..k, k..k + s), r.block(k..k + s, k..k + s))
}

/// Brings `(P, N)` to the positive-diagonal convention, given the normalizer
/// `N₁` of the step that produced the basis.
pub fn canonical_pn(n1: &Matrix, p: &Matrix, n: &Matrix) -> (Matrix, Matrix) {
    let d: Vec<f64> = n1.diag().iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    let p = Matrix::from_fn(p.rows(), p.cols(), |i, j| d[i] * p[(i, j)]);
    (p, canonical_r(n))
}

/// `‖X − QP − UN‖_F` with `Q`, `U` read from the basis.
pub fn pqr_residual(basis: &BasisRep, x: &Matrix, res: &PqrResult) -> f64 {
    let k = basis.width() - x.cols();
    let q = basis.assemble(0..k).unwrap();
    let u = basis.assemble(k..basis.width()).unwrap();
    let mut r = x.sub(&matmul(&q, &res.p, false).unwrap()).unwrap();
    r = r.sub(&matmul(&u, res.n.as_matrix(), false).unwrap()).unwrap();
    r.frobenius_norm()
}

/// `QᵀU` for the last `s` columns of the basis against the first `k`.
pub fn cross_orthogonality(basis: &BasisRep, s: usize) -> f64 {
    let k = basis.width() - s;
    let q = basis.assemble(0..k).unwrap();
    let u = basis.assemble(k..basis.width()).unwrap();
    matmul(&q, &u, true).unwrap().frobenius_norm()
}

/// Every kernel plus a tree and a flat composition sized for `k + s` columns.
pub fn all_solvers(k: usize, s: usize) -> Vec<Solver> {
    let local_rows = 2 * (k + s);
    let mut out: Vec<Solver> = Kernel::ALL.iter().map(|&k| Solver::Kernel(k)).collect();
    out.push(Solver::tree(
        TsqrPlan::new(Solver::Kernel(Kernel::Householder), Kernel::Householder).with_local_rows(local_rows),
    ));
    out.push(Solver::flat(
        TsqrPlan::new(Solver::Kernel(Kernel::Householder), Kernel::Householder).with_local_rows(local_rows),
    ));
    out
}

pub struct Comparison {
    pub p_err: f64,
    pub n_err: f64,
    pub residual: f64,
    pub x_norm: f64,
}

/// Solves `[A₁]` then `[X]` with `solver` and compares with the oracle.
pub fn compare_with_oracle(solver: &Solver, a1: &Matrix, x: &Matrix) -> Comparison {
    let cfg = SolverConfig::default();
    let mut basis = solver.empty_basis(x.rows()).unwrap();
    let n1 = if a1.cols() > 0 {
        solver.extend(&mut basis, a1, &cfg).unwrap().n.into_inner()
    } else {
        Matrix::zeros(0, 0)
    };
    let res = solver.extend(&mut basis, x, &cfg).unwrap();
    let (p, n) = canonical_pn(&n1, &res.p, res.n.as_matrix());
    let (p_ref, n_ref) = oracle_blocks(a1, x);
    Comparison {
        p_err: if p.rows() == 0 { 0.0 } else { max_abs_diff(&p, &p_ref) },
        n_err: max_abs_diff(&n, &n_ref),
        residual: pqr_residual(&basis, x, &res),
        x_norm: x.frobenius_norm(),
    }
}
