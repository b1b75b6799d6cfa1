use rayon::prelude::*;

use crate::basis::BasisRep;
use crate::error::{PqrError, Result};
use crate::kernels::{PassCount, PqrResult, SolverConfig};
use crate::linalg::Matrix;

use super::{mismatch, split_rows, Solver, TsqrPlan};

/// Tree node: child bases over contiguous row ranges tied together by the
/// reduction basis, whose rows are the stacked child coefficient spaces.
///
/// The represented basis is `diag(Q_1, …, Q_c)·Q_red`.
#[derive(Clone, Debug)]
pub struct LocallyOrthogonalBasis {
    offsets: Vec<usize>,
    children: Vec<BasisRep>,
    reduction: Box<BasisRep>,
    level: usize,
}

impl LocallyOrthogonalBasis {
    pub fn rows(&self) -> usize {
        *self.offsets.last().expect("offsets never empty")
    }

    pub fn width(&self) -> usize {
        self.reduction.width()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn children(&self) -> &[BasisRep] {
        &self.children
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// The stacked R-factors `[R_1; …; R_c]` as explicit columns.
    pub fn stacked_factors(&self) -> Result<Matrix> {
        self.reduction.assemble_all()
    }

    pub(crate) fn apply(&self, c: &Matrix) -> Result<Matrix> {
        let red = self.reduction.apply(c)?;
        let mut out = Matrix::zeros(self.rows(), c.cols());
        let mut at = 0;
        for (child, w) in self.children.iter().zip(self.offsets.windows(2)) {
            let width = child.width();
            let part = child.apply(&red.row_block(at..at + width))?;
            out.set_block(w[0], 0, &part);
            at += width;
        }
        Ok(out)
    }

    pub(crate) fn apply_t(&self, x: &Matrix) -> Result<Matrix> {
        let parts = split_rows(x, &self.offsets)
            .iter()
            .zip(&self.children)
            .map(|(xi, child)| child.apply_t(xi))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Matrix> = parts.iter().collect();
        self.reduction.apply_t(&Matrix::vstack(&refs)?)
    }
}

/// Leaves split into `groups` contiguous runs as evenly as possible.
fn group_leaves(leaves: usize, groups: usize) -> Vec<usize> {
    let base = leaves / groups;
    let extra = leaves % groups;
    (0..groups).map(|g| base + usize::from(g < extra)).collect()
}

fn branching(leaves: usize, levels: usize) -> usize {
    if levels == 1 {
        return leaves;
    }
    let max = leaves >> (levels - 1);
    let b = (leaves as f64).powf(1.0 / levels as f64).round() as usize;
    b.clamp(2, max.max(2))
}

fn is_degenerate(plan: &TsqrPlan, leaves: usize) -> bool {
    plan.levels == 0 || leaves == 1
}

fn child_solver(plan: &TsqrPlan) -> Solver {
    if plan.levels == 1 {
        plan.local.clone()
    } else {
        Solver::tree(TsqrPlan {
            levels: plan.levels - 1,
            ..plan.clone()
        })
    }
}

pub(super) fn empty(plan: &TsqrPlan, rows: usize) -> Result<BasisRep> {
    let leaf_offsets = plan.partition(rows)?;
    let leaves = leaf_offsets.len() - 1;
    if is_degenerate(plan, leaves) {
        return plan.local.empty_basis(rows);
    }
    if plan.levels >= usize::BITS as usize || (1usize << plan.levels) > leaves {
        return Err(PqrError::InvalidPlan(format!(
            "{} recursion levels need at least {} subproblems, have {leaves}",
            plan.levels,
            1u128 << plan.levels.min(127)
        )));
    }
    let groups = group_leaves(leaves, branching(leaves, plan.levels));
    let mut offsets = vec![0];
    let mut leaf = 0;
    for g in groups {
        leaf += g;
        offsets.push(leaf_offsets[leaf]);
    }
    let child = child_solver(plan);
    let children = offsets
        .windows(2)
        .map(|w| child.empty_basis(w[1] - w[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisRep::LocallyOrthogonal(LocallyOrthogonalBasis {
        offsets,
        children,
        reduction: Box::new(plan.reduction.empty_basis(0)),
        level: plan.levels,
    }))
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
    let leaves = plan.partition(x.rows())?.len() - 1;
    if is_degenerate(plan, leaves) {
        return plan.local.extend(basis, x, cfg);
    }
    let node = match basis {
        BasisRep::LocallyOrthogonal(node) => node,
        other => return Err(mismatch("tree", other)),
    };
    let k = node.width();
    let s = x.cols();
    plan.check_tall(k, s)?;

    let child = child_solver(plan);
    let blocks = split_rows(x, &node.offsets);
    let solve = |(b, xi): (&mut BasisRep, &Matrix)| child.extend(b, xi, cfg);
    let local: Vec<PqrResult> = if plan.parallel {
        node.children
            .par_iter_mut()
            .zip(blocks.par_iter())
            .map(solve)
            .collect::<Result<_>>()?
    } else {
        node.children
            .iter_mut()
            .zip(blocks.iter())
            .map(solve)
            .collect::<Result<_>>()?
    };

    let insertions: Vec<(usize, usize)> = (1..=node.children.len()).map(|c| (c * k, s)).collect();
    node.reduction.insert_zero_rows(&insertions)?;
    let coefficients: Vec<Matrix> = local.iter().map(PqrResult::coefficients).collect();
    let refs: Vec<&Matrix> = coefficients.iter().collect();
    let stacked = Matrix::vstack(&refs)?;
    let mut result = plan.reduction.extend(&mut node.reduction, &stacked, cfg)?;
    let first = local[0].passes;
    result.passes = PassCount {
        basis_reads: first.basis_reads,
        block_reads: first.block_reads,
        reductions: 1,
    };
    Ok(result)
}
