//! Dense linear-algebra substrate: column-major storage, small factorizations
//! and the reference QR used as an oracle by the tests.

mod eigen;
mod factor;
mod matrix;

pub use eigen::{sym_sqrt_truncated, symmetric_eigen};
pub(crate) use eigen::truncated_root;
pub use factor::{
    canonical_r, canonicalize_signs, cholesky_upper, householder_qr, reference_qr,
    solve_upper_right, UpperTriangular,
};
pub use matrix::{matmul, Matrix};
pub(crate) use matrix::{axpy, dot, sub_matmul, RowMap};
