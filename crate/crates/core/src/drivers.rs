//! Consumers of the PQR interface: block column QR and block Arnoldi.

use crate::basis::BasisRep;
use crate::error::{dim_err, Result};
use crate::kernels::SolverConfig;
use crate::linalg::{matmul, Matrix, UpperTriangular};
use crate::tspqr::Solver;

/// A linear map on `R^dim`, applied to blocks of vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &Matrix) -> Result<Matrix>;
}

impl LinearOperator for Matrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        matmul(self, x, false)
    }
}

/// `diag(d)` as an operator.
#[derive(Clone, Debug)]
pub struct Diagonal(pub Vec<f64>);

impl LinearOperator for Diagonal {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.0.len() {
            return dim_err(format!("diagonal of size {} applied to {:?}", self.0.len(), x.shape()));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| self.0[i] * x[(i, j)]))
    }
}

/// Result of a block column QR.
#[derive(Clone, Debug)]
pub struct BlockQr {
    pub basis: BasisRep,
    pub q: Matrix,
    pub r: UpperTriangular,
    /// Sum of the ranks reported for each block.
    pub rank: usize,
}

/// QR factorization of `a` by solving one PQR problem per block of `s` columns.
///
/// The last block is narrower when `s` does not divide the column count.
pub fn block_column_qr(a: &Matrix, s: usize, solver: &Solver, cfg: &SolverConfig) -> Result<BlockQr> {
    if s == 0 {
        return dim_err("block width must be positive");
    }
    let m = a.cols();
    let mut basis = solver.empty_basis(a.rows())?;
    let mut r = Matrix::zeros(m, m);
    let mut rank = 0;
    let mut start = 0;
    while start < m {
        let end = (start + s).min(m);
        let res = solver.extend(&mut basis, &a.columns(start..end), cfg)?;
        r.set_block(0, start, &res.p);
        r.set_block(start, start, res.n.as_matrix());
        rank += res.rank;
        start = end;
    }
    let q = basis.assemble_all()?;
    Ok(BlockQr {
        basis,
        q,
        r: UpperTriangular::from_upper_part(r),
        rank,
    })
}

/// State after a block Arnoldi run.
#[derive(Clone, Debug)]
pub struct BlockArnoldiState {
    pub basis: BasisRep,
    /// Basis columns that carry Krylov directions, in order.
    pub active: Vec<usize>,
    /// Number of active columns contributed by each block `V_0, V_1, …`.
    pub block_sizes: Vec<usize>,
    /// Block upper Hessenberg matrix, `active.len() × (active.len() − last block)`.
    pub hessenberg: Matrix,
    /// Normalizer of the starting block.
    pub start: UpperTriangular,
    /// Steps performed (fewer than requested after full deflation).
    pub steps: usize,
}

impl BlockArnoldiState {
    /// The active basis columns `V_k` as an explicit matrix.
    pub fn basis_columns(&self) -> Result<Matrix> {
        select_columns(&self.basis, &self.active)
    }

    /// Square leading part of the Hessenberg matrix (the projection of the operator).
    pub fn projected(&self) -> Matrix {
        let c = self.hessenberg.cols();
        self.hessenberg.block(0..c, 0..c)
    }

    /// `‖A·V_{k−1} − V_k·H‖_F`.
    pub fn relation_residual(&self, op: &dyn LinearOperator) -> Result<f64> {
        let v = self.basis_columns()?;
        let c = self.hessenberg.cols();
        let av = op.apply(&v.columns(0..c))?;
        let vh = matmul(&v, &self.hessenberg, false)?;
        Ok(av.sub(&vh)?.frobenius_norm())
    }
}

fn select_columns(basis: &BasisRep, idx: &[usize]) -> Result<Matrix> {
    let mut e = Matrix::zeros(basis.width(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        e[(i, j)] = 1.0;
    }
    basis.apply(&e)
}

/// Block Arnoldi with starting block `r0`, `steps` applications of `op`.
///
/// Rank detection is always enabled: directions that fall into the current
/// basis are dropped and the block narrows; the run stops once no direction is left.
pub fn block_arnoldi(
    op: &dyn LinearOperator,
    r0: &Matrix,
    steps: usize,
    solver: &Solver,
    cfg: &SolverConfig,
) -> Result<BlockArnoldiState> {
    let n = op.dim();
    if r0.rows() != n {
        return dim_err(format!("operator of size {n} with starting block {:?}", r0.shape()));
    }
    if steps * r0.cols() > n {
        return dim_err(format!("{steps} steps of width {} exceed dimension {n}", r0.cols()));
    }
    let cfg = cfg.with_rank_detection();
    let mut basis = solver.empty_basis(n)?;
    let first = solver.extend(&mut basis, r0, &cfg)?;
    let mut active: Vec<usize> = first.active.clone();
    let mut block_sizes = vec![active.len()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut last: Vec<usize> = active.clone();
    let mut done = 0;

    while done < steps && !last.is_empty() {
        let v = select_columns(&basis, &last)?;
        let x = op.apply(&v)?;
        if x.shape() != v.shape() {
            return dim_err(format!("operator returned {:?} for {:?}", x.shape(), v.shape()));
        }
        let offset = basis.width();
        let res = solver.extend(&mut basis, &x, &cfg)?;
        let new: Vec<usize> = res.active.iter().map(|&i| offset + i).collect();
        for j in 0..x.cols() {
            let mut col: Vec<f64> = active.iter().map(|&i| res.p[(i, j)]).collect();
            col.extend(res.active.iter().map(|&i| res.n[(i, j)]));
            columns.push(col);
        }
        active.extend(&new);
        block_sizes.push(new.len());
        last = new;
        done += 1;
    }

    let rows = active.len();
    let hessenberg = Matrix::from_fn(rows, columns.len(), |i, j| {
        columns[j].get(i).copied().unwrap_or(0.0)
    });
    Ok(BlockArnoldiState {
        basis,
        active,
        block_sizes,
        hessenberg,
        start: first.n,
        steps: done,
    })
}
