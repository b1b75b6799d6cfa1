//! The six PQR kernels behind one contract.
//!
//! Every kernel takes a basis `Q` (`k` orthonormal columns) and a block `X`
//! (`s` columns), extends the basis by `s` columns `U` and returns `P` (`k×s`)
//! and the upper-triangular normalizer `N` (`s×s`). Under deflation `N` keeps
//! its `s×s` shape with zero rows below the detected rank, and the padded
//! columns of `U` are zero (Gram-Schmidt family) or arbitrary orthonormal
//! completions (Householder).

mod gram;
mod gram_schmidt;
mod householder;
mod pip;

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use crate::basis::{BasisRep, ReflectorSeq};
use crate::error::{PqrError, Result};
use crate::linalg::{Matrix, UpperTriangular};

pub use gram::{factor_gram, GramFactor};
pub use gram_schmidt::{bcgs, bcgs_plus, bmgs, recombine};
pub use householder::householder;
pub use pip::{bcgs_pip, bcgs_pip_plus, fused_gram, pip_normalize};

/// Default relative cutoff for discarding directions of `G − PᵀP`.
pub const DEFAULT_DEFLATION_TOL: f64 = 1e-10;

/// Sign of the Householder diagonal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignConvention {
    /// `N_ii = σλ` with `σ = −sgn(ũ_pivot)`, `sgn(0) = +1`.
    #[default]
    Householder,
    /// Flip reflected columns so that `diag(N) ≥ 0`.
    NonNegativeDiagonal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Eigenvalues of `G − PᵀP` at or below `deflation_tol·σ_max` are dropped on the SVD path.
    pub deflation_tol: f64,
    /// Run the reiterated form of BCGS / BCGS-PIP.
    pub reiterate: bool,
    pub sign_convention: SignConvention,
    /// Fall back to the truncated symmetric root when Cholesky breaks down;
    /// otherwise a breakdown is reported as [`PqrError::DeflationNeeded`].
    pub svd_fallback: bool,
    /// Always take the truncated-root path and additionally measure the
    /// cutoff against the norm of the incoming block, so that directions
    /// already contained in the basis are detected.
    pub rank_detection: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            deflation_tol: DEFAULT_DEFLATION_TOL,
            reiterate: false,
            sign_convention: SignConvention::Householder,
            svd_fallback: true,
            rank_detection: false,
        }
    }
}

impl SolverConfig {
    pub fn with_rank_detection(mut self) -> Self {
        self.rank_detection = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.deflation_tol) {
            return Err(PqrError::InvalidPlan(format!(
                "deflation_tol {} outside [0, 1)",
                self.deflation_tol
            )));
        }
        Ok(())
    }
}

/// Data passes and global reductions a row-distributed run of a kernel would perform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PassCount {
    pub basis_reads: usize,
    pub block_reads: usize,
    pub reductions: usize,
}

impl Add for PassCount {
    type Output = PassCount;

    fn add(self, o: PassCount) -> PassCount {
        PassCount {
            basis_reads: self.basis_reads + o.basis_reads,
            block_reads: self.block_reads + o.block_reads,
            reductions: self.reductions + o.reductions,
        }
    }
}

/// Outcome of one PQR solve.
#[derive(Clone, Debug)]
pub struct PqrResult {
    /// Projection coefficients, `k×s`.
    pub p: Matrix,
    /// Normalizer, `s×s` upper triangular; rows at or past `rank` are zero
    /// except for Householder, which keeps its (tiny) diagonal entries.
    pub n: UpperTriangular,
    /// Number of new directions that were not deflated.
    pub rank: usize,
    /// Indices (within the `s` new columns) of the non-deflated directions.
    pub active: Vec<usize>,
    pub passes: PassCount,
}

impl PqrResult {
    /// The `(k+s)×s` coefficient block `[P; N]`.
    pub fn coefficients(&self) -> Matrix {
        Matrix::vstack(&[&self.p, self.n.as_matrix()]).expect("P and N share column count")
    }
}

/// Result of a kernel acting on an explicit basis: the coefficients plus the new columns.
#[derive(Clone, Debug)]
pub struct ExplicitStep {
    pub result: PqrResult,
    pub u: Matrix,
}

/// Identifier of a PQR kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kernel {
    Bcgs,
    Bmgs,
    BcgsPlus,
    BcgsPip,
    BcgsPipPlus,
    Householder,
}

impl Kernel {
    pub const ALL: [Kernel; 6] = [
        Kernel::Bcgs,
        Kernel::Bmgs,
        Kernel::BcgsPlus,
        Kernel::BcgsPip,
        Kernel::BcgsPipPlus,
        Kernel::Householder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Bcgs => "bcgs",
            Kernel::Bmgs => "bmgs",
            Kernel::BcgsPlus => "bcgs+",
            Kernel::BcgsPip => "bcgs-pip",
            Kernel::BcgsPipPlus => "bcgs-pip+",
            Kernel::Householder => "hh",
        }
    }

    /// Whether the orthogonality error stays at machine precision (for `εκ² ≤ 1/2`).
    pub fn is_stable(self) -> bool {
        matches!(
            self,
            Kernel::BcgsPlus | Kernel::BcgsPipPlus | Kernel::Householder
        )
    }

    /// The kernel actually run under `cfg` (reiteration upgrades BCGS and BCGS-PIP).
    pub fn effective(self, cfg: &SolverConfig) -> Kernel {
        match (self, cfg.reiterate) {
            (Kernel::Bcgs, true) => Kernel::BcgsPlus,
            (Kernel::BcgsPip, true) => Kernel::BcgsPipPlus,
            (k, _) => k,
        }
    }

    pub fn empty_basis(self, rows: usize) -> BasisRep {
        match self {
            Kernel::Householder => BasisRep::Reflectors(ReflectorSeq::new(rows)),
            _ => BasisRep::Explicit(Matrix::zeros(rows, 0)),
        }
    }

    /// Solves the PQR problem for `basis` and `x` and appends the new block to the basis.
    pub fn extend(
        self,
        basis: &mut BasisRep,
        x: &Matrix,
        cfg: &SolverConfig,
    ) -> Result<PqrResult> {
        cfg.validate()?;
        if x.rows() != basis.rows() {
            return Err(PqrError::Dimension(format!(
                "block has {} rows, basis has {}",
                x.rows(),
                basis.rows()
            )));
        }
        let kernel = self.effective(cfg);
        match (kernel, basis) {
            (Kernel::Householder, BasisRep::Reflectors(h)) => householder(h, x, cfg),
            (Kernel::Householder, other) => Err(mismatch(kernel, other)),
            (_, BasisRep::Explicit(q)) => {
                let step = match kernel {
                    Kernel::Bcgs => bcgs(q, x, cfg)?,
                    Kernel::Bmgs => bmgs(q, x, cfg)?,
                    Kernel::BcgsPlus => bcgs_plus(q, x, cfg)?,
                    Kernel::BcgsPip => bcgs_pip(q, x, cfg)?,
                    Kernel::BcgsPipPlus => bcgs_pip_plus(q, x, cfg)?,
                    Kernel::Householder => unreachable!(),
                };
                q.append_columns(&step.u)?;
                Ok(step.result)
            }
            (_, other) => Err(mismatch(kernel, other)),
        }
    }
}

fn mismatch(kernel: Kernel, basis: &BasisRep) -> PqrError {
    PqrError::RepresentationMismatch {
        solver: kernel.name().to_string(),
        representation: basis.kind(),
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = PqrError;

    fn from_str(s: &str) -> Result<Self> {
        let k = match s.to_ascii_lowercase().as_str() {
            "bcgs" | "cgs" => Kernel::Bcgs,
            "bmgs" | "mgs" => Kernel::Bmgs,
            "bcgs+" | "bcgs-plus" | "cgs+" => Kernel::BcgsPlus,
            "bcgs-pip" | "pip" => Kernel::BcgsPip,
            "bcgs-pip+" | "bcgs-pip-plus" | "pip+" => Kernel::BcgsPipPlus,
            "hh" | "householder" => Kernel::Householder,
            _ => return Err(PqrError::UnknownSolver(s.to_string())),
        };
        Ok(k)
    }
}
