mod common;

use common::{max_abs_diff, random, rng, stewart};
use nalgebra::{DMatrix, SymmetricEigen};
use pqr::drivers::{block_arnoldi, block_column_qr, BlockArnoldiState, Diagonal, LinearOperator};
use pqr::linalg::{canonical_r, reference_qr};
use pqr::testmat::{ortho_error, residual_error};
use pqr::{Kernel, Matrix, Solver, SolverConfig, TsqrPlan};
use rand::Rng;

/// Steps after which both extremes of diag(1..64) are resolved to 1e-6 with two start vectors.
const CONVERGED_STEPS: usize = 24;

fn ritz_values(st: &BlockArnoldiState) -> Vec<f64> {
    let h = st.projected();
    let c = h.rows();
    let sym = DMatrix::from_fn(c, c, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn diag_1_to_64() -> Diagonal {
    Diagonal((1..=64).map(f64::from).collect())
}

fn sparse_like(n: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let mut a = Matrix::zeros(n, n);
    for j in 0..n {
        a[(j, j)] = 2.0 + r.random::<f64>();
        for _ in 0..8 {
            let i = r.random_range(0..n);
            a[(i, j)] += r.random::<f64>() - 0.5;
        }
    }
    a
}

#[test]
fn identity_operator_deflates_at_first_step() {
    let op = Diagonal(vec![1.0; 50]);
    let r0 = random(50, 3, 1);
    for solver in [Solver::Kernel(Kernel::Householder), Solver::Kernel(Kernel::BcgsPipPlus)] {
        let st = block_arnoldi(&op, &r0, 5, &solver, &SolverConfig::default()).unwrap();
        assert_eq!(st.steps, 1);
        assert_eq!(st.block_sizes, vec![3, 0]);
    }
}

#[test]
fn ritz_values_reach_extreme_eigenvalues() {
    let op = diag_1_to_64();
    let r0 = random(64, 2, 2);
    let solver = Solver::Kernel(Kernel::Householder);
    let early = ritz_values(&block_arnoldi(&op, &r0, 16, &solver, &SolverConfig::default()).unwrap());
    assert!(early[0] >= 1.0 - 1e-12 && early[early.len() - 1] <= 64.0 + 1e-12);
    let st = block_arnoldi(&op, &r0, CONVERGED_STEPS, &solver, &SolverConfig::default()).unwrap();
    let ev = ritz_values(&st);
    assert!((ev[0] - 1.0).abs() <= 1e-6, "{}", ev[0]);
    assert!((ev[ev.len() - 1] - 64.0).abs() <= 1e-6, "{}", ev[ev.len() - 1]);
}

#[test]
fn ritz_extremes_move_outwards() {
    let op = diag_1_to_64();
    let r0 = random(64, 2, 3);
    let cfg = SolverConfig::default();
    for k in [Kernel::Householder, Kernel::BcgsPlus] {
        for j in [1, 2, 4, 8] {
            let a = ritz_values(&block_arnoldi(&op, &r0, j, &Solver::Kernel(k), &cfg).unwrap());
            let b = ritz_values(&block_arnoldi(&op, &r0, 2 * j, &Solver::Kernel(k), &cfg).unwrap());
            assert!(b[0] <= a[0] + 1e-12);
            assert!(b[b.len() - 1] >= a[a.len() - 1] - 1e-12);
        }
    }
}

#[test]
fn arnoldi_relation_holds() {
    let a = sparse_like(1024, 4);
    let r0 = random(1024, 4, 5);
    let tree = Solver::tree(
        TsqrPlan::new(Solver::Kernel(Kernel::Householder), Kernel::Householder).with_local_rows(256),
    );
    for solver in [Solver::Kernel(Kernel::Householder), tree] {
        let st = block_arnoldi(&a, &r0, 12, &solver, &SolverConfig::default()).unwrap();
        let v = st.basis_columns().unwrap();
        let rel = st.relation_residual(&a).unwrap() / (a.frobenius_norm() * v.frobenius_norm());
        assert!(rel <= 1e-10, "{solver}: {rel}");
        assert!(ortho_error(&v) <= 1e-12);
    }
}

#[test]
fn hessenberg_has_block_structure() {
    let a = sparse_like(200, 6);
    let r0 = random(200, 3, 7);
    let st = block_arnoldi(&a, &r0, 6, &Solver::Kernel(Kernel::BcgsPipPlus), &SolverConfig::default()).unwrap();
    let h = &st.hessenberg;
    let starts: Vec<usize> = st
        .block_sizes
        .iter()
        .scan(0, |acc, &b| {
            let s = *acc;
            *acc += b;
            Some(s)
        })
        .collect();
    assert_eq!(h.rows(), st.block_sizes.iter().sum::<usize>());
    for (bj, &cj) in starts.iter().enumerate().take(st.steps) {
        for (bi, &ri) in starts.iter().enumerate() {
            if bi <= bj + 1 {
                continue;
            }
            for i in ri..ri + st.block_sizes[bi] {
                for j in cj..cj + st.block_sizes[bj] {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
    }
}

#[test]
fn operator_is_linear() {
    let a = sparse_like(64, 8);
    let d = diag_1_to_64();
    let x = random(64, 3, 9);
    let y = random(64, 3, 10);
    let xy = x.add(&y).unwrap();
    for op in [&a as &dyn LinearOperator, &d] {
        let lhs = op.apply(&xy).unwrap();
        let rhs = op.apply(&x).unwrap().add(&op.apply(&y).unwrap()).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) <= 1e-12);
    }
}

#[test]
fn arnoldi_rejects_bad_dimensions() {
    let op = diag_1_to_64();
    let cfg = SolverConfig::default();
    let solver = Solver::Kernel(Kernel::Householder);
    assert!(block_arnoldi(&op, &random(63, 2, 11), 2, &solver, &cfg).is_err());
    assert!(block_arnoldi(&op, &random(64, 2, 11), 33, &solver, &cfg).is_err());
}

#[test]
fn orthonormal_input_gives_identity_r() {
    let a = reference_qr(&random(500, 16, 12)).unwrap().0;
    for k in Kernel::ALL {
        let f = block_column_qr(&a, 4, &Solver::Kernel(k), &SolverConfig::default()).unwrap();
        let abs_r = Matrix::from_fn(16, 16, |i, j| f.r.as_matrix()[(i, j)].abs());
        assert!(max_abs_diff(&abs_r, &Matrix::identity(16)) <= 1e-13, "{k}");
        assert!(ortho_error(&f.q) <= 1e-13, "{k}");
    }
}

#[test]
fn pip_plus_residual_at_table_scale() {
    let a = stewart(1 << 16, 64, 1e4, 13);
    let f = block_column_qr(&a, 4, &Solver::Kernel(Kernel::BcgsPipPlus), &SolverConfig::default()).unwrap();
    assert!(residual_error(&a, &f.q, f.r.as_matrix()).unwrap() <= 1e-13);
}

#[test]
fn block_qr_matches_reference() {
    let a = stewart(400, 20, 1e3, 14);
    let r_ref = reference_qr(&a).unwrap().1.into_inner();
    for k in Kernel::ALL {
        let f = block_column_qr(&a, 4, &Solver::Kernel(k), &SolverConfig::default()).unwrap();
        assert!(max_abs_diff(&canonical_r(f.r.as_matrix()), &r_ref) <= 1e-8, "{k}");
    }
}
