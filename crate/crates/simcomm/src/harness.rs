use pqr::{BasisRep, Matrix, PqrResult, Solver, SolverConfig, UpperTriangular};

use crate::group::{CommStats, Communicator, RankGroup};
use crate::reduce::{distributed_pqr, DistState, Reduction};
use crate::{Result, SimError};

/// What a rank keeps after a distributed run.
#[derive(Clone, Debug)]
pub struct RankOutcome {
    pub basis: BasisRep,
    pub state: DistState,
    pub results: Vec<PqrResult>,
    /// Collectives started during each solve (as seen by rank 0).
    pub syncs: Vec<usize>,
}

/// Result of a distributed block column QR.
#[derive(Clone, Debug)]
pub struct DistributedQr {
    pub q: Matrix,
    pub r: UpperTriangular,
    pub stats: CommStats,
    pub syncs_per_solve: Vec<usize>,
    /// Row offsets of the rank blocks.
    pub offsets: Vec<usize>,
}

/// Contiguous row blocks, as even as possible, the first ranks taking the extra rows.
pub fn rank_offsets(rows: usize, ranks: usize) -> Vec<usize> {
    let base = rows / ranks;
    let extra = rows % ranks;
    let mut offsets = vec![0];
    for r in 0..ranks {
        offsets.push(offsets[r] + base + usize::from(r < extra));
    }
    offsets
}

/// Sum-allreduce of one matrix per rank; every rank's copy of the sum is returned.
pub fn allreduce_sum(group: &RankGroup, locals: &[Matrix]) -> Result<(Vec<Matrix>, CommStats)> {
    if locals.len() != group.size() {
        return Err(SimError::RankCount {
            expected: group.size(),
            got: locals.len(),
        });
    }
    group.run(|comm| comm.allreduce_sum(&locals[comm.rank()]))
}

/// Block column QR of `a` with its rows split over `ranks` ranks.
///
/// Each rank solves its rows with `local`, the reduction combines the ranks,
/// and the explicit `Q` is assembled serially afterwards.
pub fn distributed_block_qr(
    a: &Matrix,
    ranks: usize,
    s: usize,
    local: &Solver,
    reduction: Reduction,
    cfg: &SolverConfig,
) -> Result<DistributedQr> {
    if s == 0 {
        return Err(SimError::State("block width must be positive".into()));
    }
    let group = RankGroup::new(ranks)?;
    let offsets = rank_offsets(a.rows(), ranks);
    let m = a.cols();
    let (outcomes, stats) = group.run(|comm| {
        let rank = comm.rank();
        let rows = a.row_block(offsets[rank]..offsets[rank + 1]);
        let mut basis = local.empty_basis(rows.rows())?;
        let mut state = DistState::new(reduction);
        let mut results = Vec::new();
        let mut syncs = Vec::new();
        let mut start = 0;
        while start < m {
            let end = (start + s).min(m);
            let before = comm.sync_count();
            let res = distributed_pqr(
                comm,
                local,
                &mut basis,
                &rows.columns(start..end),
                reduction,
                &mut state,
                cfg,
            )?;
            syncs.push(comm.sync_count() - before);
            results.push(res);
            start = end;
        }
        Ok(RankOutcome {
            basis,
            state,
            results,
            syncs,
        })
    })?;

    let mut r = Matrix::zeros(m, m);
    let mut start = 0;
    for res in &outcomes[0].results {
        let w = res.n.cols();
        r.set_block(0, start, &res.p);
        r.set_block(start, start, res.n.as_matrix());
        start += w;
    }
    let q = assemble(&group, &outcomes, &offsets)?;
    Ok(DistributedQr {
        q,
        r: UpperTriangular::from_upper_part(r),
        stats,
        syncs_per_solve: outcomes[0].syncs.clone(),
        offsets,
    })
}

/// Explicit global basis from the per-rank outcomes.
pub fn assemble(group: &RankGroup, outcomes: &[RankOutcome], offsets: &[usize]) -> Result<Matrix> {
    if outcomes.len() != group.size() {
        return Err(SimError::RankCount {
            expected: group.size(),
            got: outcomes.len(),
        });
    }
    if group.size() == 1 {
        return Ok(outcomes[0].basis.assemble_all()?);
    }
    match &outcomes[0].state {
        DistState::Sum { q_red } => {
            let mut out = Matrix::zeros(offsets[group.size()], q_red.cols());
            for (rank, o) in outcomes.iter().enumerate() {
                let DistState::Sum { q_red } = &o.state else {
                    return Err(SimError::State("mixed reduction states".into()));
                };
                out.set_block(offsets[rank], 0, &o.basis.apply(q_red)?);
            }
            Ok(out)
        }
        DistState::Tree(root) => {
            let width = root
                .node()
                .ok_or_else(|| SimError::State("root holds no reduction basis".into()))?
                .width();
            let mut out = Matrix::zeros(offsets[group.size()], width);
            apply_node(group, outcomes, offsets, 0, &Matrix::identity(width), &mut out)?;
            Ok(out)
        }
    }
}

fn apply_node(
    group: &RankGroup,
    outcomes: &[RankOutcome],
    offsets: &[usize],
    rank: usize,
    c: &Matrix,
    out: &mut Matrix,
) -> Result<()> {
    let o = &outcomes[rank];
    let DistState::Tree(st) = &o.state else {
        return Err(SimError::State("mixed reduction states".into()));
    };
    let Some(node) = st.node() else {
        out.set_block(offsets[rank], 0, &o.basis.apply(c)?);
        return Ok(());
    };
    let y = node.apply(c)?;
    let widths = st.widths();
    let own = y.row_block(0..widths[0]);
    out.set_block(offsets[rank], 0, &o.basis.apply(&own)?);
    let mut at = widths[0];
    for (child, &w) in group.children(rank).iter().zip(&widths[1..]) {
        apply_node(group, outcomes, offsets, *child, &y.row_block(at..at + w), out)?;
        at += w;
    }
    Ok(())
}
