//! TSPQR: row-partitioned PQR with pluggable local and reduction solvers.
//!
//! The tree variant solves all row blocks independently and reduces the
//! stacked `[P_i; N_i]` with the reduction kernel, applied recursively when
//! `levels > 1`. The flat variant walks the row blocks in order and carries
//! `[P_{i−1}; N_{i−1}]` into the next local problem.

mod flat;
mod tree;

use std::fmt;

use crate::basis::BasisRep;
use crate::error::{PqrError, Result};
use crate::kernels::{Kernel, PqrResult, SolverConfig};
use crate::linalg::Matrix;

pub use flat::FlatProductBasis;
pub use tree::LocallyOrthogonalBasis;

/// Default number of rows per local problem.
pub const DEFAULT_LOCAL_ROWS: usize = 4096;

/// A PQR solver: a plain kernel or one of the TSPQR compositions.
#[derive(Clone, Debug, PartialEq)]
pub enum Solver {
    Kernel(Kernel),
    Tree(Box<TsqrPlan>),
    Flat(Box<TsqrPlan>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TsqrPlan {
    /// Rows per local problem; the last block absorbs the remainder.
    pub local_rows: usize,
    pub local: Solver,
    pub reduction: Kernel,
    /// Recursion depth of the tree variant (0 = local solver only).
    pub levels: usize,
    /// Solve sibling subproblems concurrently (results do not depend on it).
    pub parallel: bool,
}

impl TsqrPlan {
    pub fn new(local: Solver, reduction: Kernel) -> Self {
        Self {
            local_rows: DEFAULT_LOCAL_ROWS,
            local,
            reduction,
            levels: 1,
            parallel: false,
        }
    }

    pub fn with_local_rows(mut self, local_rows: usize) -> Self {
        self.local_rows = local_rows;
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    /// Row offsets of the local problems for `rows` rows.
    pub fn partition(&self, rows: usize) -> Result<Vec<usize>> {
        if self.local_rows == 0 {
            return Err(PqrError::InvalidPlan("local_rows must be positive".into()));
        }
        let p = (rows / self.local_rows).max(1);
        let mut offsets: Vec<usize> = (0..p).map(|i| i * self.local_rows).collect();
        offsets.push(rows);
        Ok(offsets)
    }

    fn check_tall(&self, k: usize, s: usize) -> Result<()> {
        if self.local_rows < k + s {
            return Err(PqrError::InvalidPlan(format!(
                "local problems of {} rows cannot hold {} basis columns",
                self.local_rows,
                k + s
            )));
        }
        Ok(())
    }
}

impl Solver {
    pub fn kernel(k: Kernel) -> Self {
        Solver::Kernel(k)
    }

    pub fn tree(plan: TsqrPlan) -> Self {
        Solver::Tree(Box::new(plan))
    }

    pub fn flat(plan: TsqrPlan) -> Self {
        Solver::Flat(Box::new(plan))
    }

    /// Basis with no columns over `rows` rows, in the representation this solver maintains.
    pub fn empty_basis(&self, rows: usize) -> Result<BasisRep> {
        match self {
            Solver::Kernel(k) => Ok(k.empty_basis(rows)),
            Solver::Tree(plan) => tree::empty(plan, rows),
            Solver::Flat(plan) => flat::empty(plan, rows),
        }
    }

    /// Solves the PQR problem for `basis` and `x`, extending the basis in place.
    pub fn extend(&self, basis: &mut BasisRep, x: &Matrix, cfg: &SolverConfig) -> Result<PqrResult> {
        match self {
            Solver::Kernel(k) => k.extend(basis, x, cfg),
            Solver::Tree(plan) => tree::extend(plan, basis, x, cfg),
            Solver::Flat(plan) => flat::extend(plan, basis, x, cfg),
        }
    }

    /// Whether every component of the solver is a stable kernel.
    pub fn is_stable(&self) -> bool {
        match self {
            Solver::Kernel(k) => k.is_stable(),
            Solver::Tree(plan) => plan.local.is_stable() && plan.reduction.is_stable(),
            Solver::Flat(plan) => plan.local.is_stable(),
        }
    }
}

impl From<Kernel> for Solver {
    fn from(k: Kernel) -> Self {
        Solver::Kernel(k)
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Solver::Kernel(k) => write!(f, "{k}"),
            Solver::Tree(p) => write!(
                f,
                "tree({}/{}, levels={}, rows={})",
                p.local, p.reduction, p.levels, p.local_rows
            ),
            Solver::Flat(p) => write!(f, "flat({}, rows={})", p.local, p.local_rows),
        }
    }
}

fn mismatch(solver: &str, basis: &BasisRep) -> PqrError {
    PqrError::RepresentationMismatch {
        solver: solver.to_string(),
        representation: basis.kind(),
    }
}

fn split_rows(x: &Matrix, offsets: &[usize]) -> Vec<Matrix> {
    offsets.windows(2).map(|w| x.row_block(w[0]..w[1])).collect()
}
