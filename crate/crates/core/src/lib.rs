//! Block orthogonalization through the project-and-normalize (PQR) problem.
//!
//! Given a basis `Q` with orthonormal columns and a new block `X`, a PQR solver
//! computes `U`, `P` and `N` such that
//!
//! ```text
//! [Q X] = [Q U] · | I  P |
//!                 | 0  N |
//! ```
//!
//! with `QᵀU = 0`. The crate provides six kernels (block classical and modified
//! Gram-Schmidt, reiterated classical Gram-Schmidt, Householder, BCGS-PIP and
//! its reiterated form), the tree and flat TSPQR composition schemes that split
//! the problem row-wise and reduce the per-block results, drivers (block
//! column QR and block Arnoldi), Stewart test matrices with the orthogonality
//! and residual metrics, and analytical roofline / LogP cost models.

pub mod basis;
pub mod drivers;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod perf;
pub mod testmat;
pub mod tspqr;

pub use basis::{BasisRep, ReflectorSeq};
pub use error::{PqrError, Result};
pub use kernels::{Kernel, PassCount, PqrResult, SignConvention, SolverConfig};
pub use linalg::{Matrix, UpperTriangular};
pub use tspqr::{FlatProductBasis, LocallyOrthogonalBasis, Solver, TsqrPlan};
