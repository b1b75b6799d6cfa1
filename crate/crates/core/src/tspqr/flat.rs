use crate::basis::BasisRep;
use crate::error::{PqrError, Result};
use crate::kernels::{PassCount, PqrResult, SolverConfig};
use crate::linalg::Matrix;

use super::{mismatch, split_rows, Solver, TsqrPlan};

/// Chain of factors `Q_0, …, Q_{p−1}` for flat TSPQR.
///
/// Factor `i ≥ 1` acts on the coefficient space of factor `i−1` stacked on
/// top of row block `i`; the represented basis is
/// `diag(Q_0, I)·diag(Q_1, I)⋯Q_{p−1}`.
#[derive(Clone, Debug)]
pub struct FlatProductBasis {
    offsets: Vec<usize>,
    factors: Vec<BasisRep>,
}

impl FlatProductBasis {
    pub fn rows(&self) -> usize {
        *self.offsets.last().expect("offsets never empty")
    }

    pub fn width(&self) -> usize {
        self.factors.last().expect("at least one factor").width()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn factors(&self) -> &[BasisRep] {
        &self.factors
    }

    pub(crate) fn apply(&self, c: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(self.rows(), c.cols());
        let mut carry = c.clone();
        for (i, factor) in self.factors.iter().enumerate().rev() {
            let y = factor.apply(&carry)?;
            let (start, end) = (self.offsets[i], self.offsets[i + 1]);
            let top = y.rows() - (end - start);
            out.set_block(start, 0, &y.row_block(top..y.rows()));
            carry = y.row_block(0..top);
        }
        Ok(out)
    }

    pub(crate) fn apply_t(&self, x: &Matrix) -> Result<Matrix> {
        let blocks = split_rows(x, &self.offsets);
        let mut carry = self.factors[0].apply_t(&blocks[0])?;
        for (factor, block) in self.factors.iter().zip(&blocks).skip(1) {
            carry = factor.apply_t(&Matrix::vstack(&[&carry, block])?)?;
        }
        Ok(carry)
    }
}

fn local_kernel(plan: &TsqrPlan) -> Result<crate::kernels::Kernel> {
    match &plan.local {
        Solver::Kernel(k) => Ok(*k),
        other => Err(PqrError::InvalidPlan(format!(
            "flat TSPQR needs a kernel as local solver, got {other}"
        ))),
    }
}

pub(super) fn empty(plan: &TsqrPlan, rows: usize) -> Result<BasisRep> {
    let offsets = plan.partition(rows)?;
    if offsets.len() == 2 {
        return plan.local.empty_basis(rows);
    }
    let kernel = local_kernel(plan)?;
    let factors = offsets
        .windows(2)
        .map(|w| kernel.empty_basis(w[1] - w[0]))
        .collect();
    Ok(BasisRep::FlatProduct(FlatProductBasis { offsets, factors }))
}

pub(super) fn extend(
    plan: &TsqrPlan,
    basis: &mut BasisRep,
    x: &Matrix,
    cfg: &SolverConfig,
) -> Result<PqrResult> {
    if x.rows() != basis.rows() {
        return Err(PqrError::Dimension(format!(
            "block has {} rows, basis has {}",
            x.rows(),
            basis.rows()
        )));
    }
    let offsets = plan.partition(x.rows())?;
    if offsets.len() == 2 {
        return plan.local.extend(basis, x, cfg);
    }
    let chain = match basis {
        BasisRep::FlatProduct(chain) => chain,
        other => return Err(mismatch("flat", other)),
    };
    let kernel = local_kernel(plan)?;
    let s = x.cols();
    let k = chain.width();
    plan.check_tall(k, s)?;

    let blocks = split_rows(x, &chain.offsets);
    let mut result = kernel.extend(&mut chain.factors[0], &blocks[0], cfg)?;
    let passes = result.passes;
    for (factor, block) in chain.factors.iter_mut().zip(&blocks).skip(1) {
        factor.insert_zero_rows(&[(k, s)])?;
        let input = Matrix::vstack(&[&result.coefficients(), block])?;
        result = kernel.extend(factor, &input, cfg)?;
    }
    result.passes = PassCount {
        reductions: 0,
        ..passes
    };
    Ok(result)
}
