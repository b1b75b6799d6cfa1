use std::fmt;
use std::str::FromStr;

use pqr::kernels::{fused_gram, pip_normalize, recombine, ExplicitStep};
use pqr::{BasisRep, Kernel, Matrix, PassCount, PqrError, PqrResult, Solver, SolverConfig, UpperTriangular};

use crate::group::{Communicator, Message};
use crate::{Result, SimError};

/// How the per-rank results are combined across ranks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// BCGS-PIP on the stacked rank coefficients: one sum-allreduce.
    Pip,
    /// BCGS-PIP+: two sum-allreduces.
    PipPlus,
    /// Stateful tree reduction solving a PQR problem at every tree node.
    Tree(Kernel),
}

impl Reduction {
    /// Collectives per solve.
    pub fn syncs(self) -> usize {
        match self {
            Reduction::PipPlus => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reduction::Pip => f.write_str("bcgs-pip"),
            Reduction::PipPlus => f.write_str("bcgs-pip+"),
            Reduction::Tree(k) => write!(f, "tree:{k}"),
        }
    }
}

impl FromStr for Reduction {
    type Err = PqrError;

    fn from_str(s: &str) -> std::result::Result<Self, PqrError> {
        match s.to_ascii_lowercase().as_str() {
            "bcgs-pip" | "pip" => Ok(Reduction::Pip),
            "bcgs-pip+" | "pip+" => Ok(Reduction::PipPlus),
            other => match other.strip_prefix("tree:") {
                Some(k) => Ok(Reduction::Tree(k.parse()?)),
                None => Err(PqrError::UnknownSolver(s.to_string())),
            },
        }
    }
}

/// Per-rank state of the stateful tree reduction: the basis of this rank's
/// tree node over the groups `[own, children ascending]`.
///
/// Ranks without children pass their coefficients through and keep no node basis.
#[derive(Clone, Debug)]
pub struct TreeReductionState {
    kernel: Kernel,
    node: Option<BasisRep>,
    widths: Vec<usize>,
}

impl TreeReductionState {
    pub fn new(kernel: Kernel) -> Self {
        Self {
            kernel,
            node: None,
            widths: Vec::new(),
        }
    }

    /// The node basis, `None` for pass-through ranks.
    pub fn node(&self) -> Option<&BasisRep> {
        self.node.as_ref()
    }

    /// Current width of each group `[own, children…]`.
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    fn combine(&mut self, parts: Vec<Message>, cfg: &SolverConfig) -> Result<Message> {
        if parts.len() == 1 {
            return Ok(parts.into_iter().next().expect("one part"));
        }
        let s = parts[0].data.cols();
        if self.widths.is_empty() {
            self.widths = vec![0; parts.len()];
            self.node = Some(self.kernel.empty_basis(0));
        }
        if self.widths.len() != parts.len() {
            return Err(SimError::State(format!(
                "node has {} groups, received {}",
                self.widths.len(),
                parts.len()
            )));
        }
        let mut insertions = Vec::with_capacity(parts.len());
        let mut at = 0;
        for (w, part) in self.widths.iter().zip(&parts) {
            if part.data.shape() != (w + s, s) {
                return Err(SimError::State(format!(
                    "fragment of shape {:?}, expected {:?}",
                    part.data.shape(),
                    (w + s, s)
                )));
            }
            at += w;
            insertions.push((at, s));
        }
        let node = self.node.as_mut().expect("initialized above");
        node.insert_zero_rows(&insertions)?;
        let blocks: Vec<&Matrix> = parts.iter().map(|m| &m.data).collect();
        let stacked = Matrix::vstack(&blocks)?;
        let res = self.kernel.extend(node, &stacked, cfg)?;
        for w in &mut self.widths {
            *w += s;
        }
        Ok(Message {
            data: res.coefficients(),
            tags: res.active,
        })
    }
}

fn unpack(msg: Message, reductions: usize, local: &PqrResult) -> PqrResult {
    let s = msg.data.cols();
    let k = msg.data.rows() - s;
    PqrResult {
        p: msg.data.row_block(0..k),
        n: UpperTriangular::from_upper_part(msg.data.row_block(k..k + s)),
        rank: msg.tags.len(),
        active: msg.tags,
        passes: PassCount {
            reductions,
            ..local.passes
        },
    }
}

/// Reduces the per-rank results `local` (one per rank, from the same block
/// column) through the tree and broadcasts the global result.
///
/// With a single rank the local result is returned unchanged.
pub fn tree_reduce_pqr(
    comm: &mut dyn Communicator,
    state: &mut TreeReductionState,
    local: &PqrResult,
    cfg: &SolverConfig,
) -> Result<PqrResult> {
    if comm.size() == 1 {
        return Ok(local.clone());
    }
    let own = Message {
        data: local.coefficients(),
        tags: local.active.clone(),
    };
    let msg = comm.reduce_broadcast(own, &mut |parts| state.combine(parts, cfg))?;
    Ok(unpack(msg, 1, local))
}

/// Per-rank state of the cross-rank reduction.
#[derive(Clone, Debug)]
pub enum DistState {
    /// This rank's rows of the reduction basis (rows: local coefficient space).
    Sum { q_red: Matrix },
    Tree(TreeReductionState),
}

impl DistState {
    pub fn new(reduction: Reduction) -> Self {
        match reduction {
            Reduction::Pip | Reduction::PipPlus => DistState::Sum {
                q_red: Matrix::zeros(0, 0),
            },
            Reduction::Tree(k) => DistState::Tree(TreeReductionState::new(k)),
        }
    }
}

/// One distributed PQR solve: local solve of this rank's rows, then the
/// cross-rank reduction of the local coefficients `[P_r; N_r]`.
pub fn distributed_pqr(
    comm: &mut dyn Communicator,
    local_solver: &Solver,
    local_basis: &mut BasisRep,
    x: &Matrix,
    reduction: Reduction,
    state: &mut DistState,
    cfg: &SolverConfig,
) -> Result<PqrResult> {
    let local = local_solver.extend(local_basis, x, cfg)?;
    if comm.size() == 1 {
        return Ok(local);
    }
    match (reduction, state) {
        (Reduction::Tree(_), DistState::Tree(st)) => tree_reduce_pqr(comm, st, &local, cfg),
        (Reduction::Pip | Reduction::PipPlus, DistState::Sum { q_red }) => {
            let c = local.coefficients();
            let s = c.cols();
            *q_red = q_red.with_zero_rows(&[(q_red.rows(), s)]);
            let first = pip_step(comm, q_red, &c, cfg)?;
            let step = if reduction == Reduction::PipPlus {
                let second_cfg = SolverConfig {
                    rank_detection: false,
                    ..*cfg
                };
                let second = pip_step(comm, q_red, &first.u, &second_cfg)?;
                recombine(first, second)
            } else {
                first
            };
            q_red.append_columns(&step.u)?;
            let mut result = step.result;
            result.passes = PassCount {
                reductions: reduction.syncs(),
                ..local.passes
            };
            Ok(result)
        }
        _ => Err(SimError::State(format!("state does not match reduction {reduction}"))),
    }
}

fn pip_step(
    comm: &mut dyn Communicator,
    q_red: &Matrix,
    x: &Matrix,
    cfg: &SolverConfig,
) -> Result<ExplicitStep> {
    let partial = fused_gram(q_red, x)?;
    let global = comm.allreduce_sum(&partial)?;
    let (result, u) = pip_normalize(q_red, x, &global, cfg)?;
    Ok(ExplicitStep { result, u })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_names() {
        assert_eq!("bcgs-pip+".parse::<Reduction>().unwrap(), Reduction::PipPlus);
        assert_eq!(
            "tree:hh".parse::<Reduction>().unwrap(),
            Reduction::Tree(Kernel::Householder)
        );
        assert!("tree:foo".parse::<Reduction>().is_err());
        assert_eq!(Reduction::Tree(Kernel::BcgsPlus).to_string(), "tree:bcgs+");
    }
}
