//! Analytical cost models: flop and byte counts per algorithm stage, the
//! roofline estimate, the LogP reduction time and the crossover predicate
//! between a BCGS-PIP+ reduction and a TSPQR reduction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{PqrError, Result};

/// Algorithms with a cost model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostAlg {
    BcgsPip,
    BcgsPipPlus,
    Householder,
    /// TSPQR with BCGS-PIP+ as local solver.
    TspqrPipPlus,
    /// TSPQR with Householder as local solver.
    TspqrHouseholder,
}

impl CostAlg {
    pub const ALL: [CostAlg; 5] = [
        CostAlg::BcgsPip,
        CostAlg::BcgsPipPlus,
        CostAlg::Householder,
        CostAlg::TspqrPipPlus,
        CostAlg::TspqrHouseholder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostAlg::BcgsPip => "bcgs-pip",
            CostAlg::BcgsPipPlus => "bcgs-pip+",
            CostAlg::Householder => "hh",
            CostAlg::TspqrPipPlus => "tspqr-pip+",
            CostAlg::TspqrHouseholder => "tspqr-hh",
        }
    }
}

impl fmt::Display for CostAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostAlg {
    type Err = PqrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bcgs-pip" | "pip" => Ok(CostAlg::BcgsPip),
            "bcgs-pip+" | "pip+" => Ok(CostAlg::BcgsPipPlus),
            "hh" | "householder" => Ok(CostAlg::Householder),
            "tspqr-pip+" | "tspqr-bcgs-pip+" => Ok(CostAlg::TspqrPipPlus),
            "tspqr-hh" => Ok(CostAlg::TspqrHouseholder),
            _ => Err(PqrError::UnknownSolver(s.to_string())),
        }
    }
}

/// Flops (`gamma`) and bytes read (`delta`) for stage 1 (extend the basis)
/// and stage 2 (assemble `U` or form `QC`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostProfile {
    pub gamma1: u128,
    pub delta1: u128,
    pub gamma2: u128,
    pub delta2: u128,
}

impl CostProfile {
    pub fn stage1(&self) -> (u128, u128) {
        (self.gamma1, self.delta1)
    }

    pub fn stage2(&self) -> (u128, u128) {
        (self.gamma2, self.delta2)
    }

    pub fn total_flops(&self) -> u128 {
        self.gamma1 + self.gamma2
    }
}

/// Cost of one PQR solve with `n` rows, `k` basis columns and block width `s`.
///
/// `m` is the column count of the coefficient matrix `C` in the stage-2
/// product `[Q U]·C` of the Gram-Schmidt variants; `m = 0` means the basis
/// is kept explicitly and stage 2 is free.
pub fn cost_profile(alg: CostAlg, n: u64, k: u64, s: u64, m: u64) -> Result<CostProfile> {
    if n == 0 || s == 0 {
        return Err(PqrError::InvalidPlan("n and s must be positive".into()));
    }
    let (n, k, s, m) = (n as u128, k as u128, s as u128, m as u128);
    let pip_stage2 = if m == 0 {
        (0, 0)
    } else {
        (2 * (k + s) * m * n, 8 * (k + s) * n)
    };
    let p = match alg {
        CostAlg::BcgsPip => CostProfile {
            gamma1: (4 * s * k + 6 * s * s) * n,
            delta1: 16 * (k + s) * n,
            gamma2: pip_stage2.0,
            delta2: pip_stage2.1,
        },
        CostAlg::BcgsPipPlus => CostProfile {
            gamma1: (8 * s * k + 12 * s * s) * n,
            delta1: 32 * (k + s) * n,
            gamma2: pip_stage2.0,
            delta2: pip_stage2.1,
        },
        CostAlg::Householder => CostProfile {
            gamma1: (4 * k * s + 2 * s * s - 2 * s) * n,
            delta1: 16 * (k * (s + 1) + s * s - s) * n,
            gamma2: 4 * (k + s) * s * n,
            delta2: 16 * (k + s) * (s + 1) * n,
        },
        CostAlg::TspqrPipPlus => tspqr(n, k, s, 8 * s * k + 12 * s * s, 2 * (s * k + s * s)),
        CostAlg::TspqrHouseholder => tspqr(n, k, s, 4 * s * k + 2 * s * s, 4 * (s * k + s * s)),
    };
    Ok(p)
}

fn tspqr(n: u128, k: u128, s: u128, nu: u128, theta: u128) -> CostProfile {
    CostProfile {
        gamma1: nu * n,
        delta1: 8 * (k + s) * n,
        gamma2: theta * n,
        delta2: 8 * (k + s) * n,
    }
}

/// Single-node machine: peak flop rate and memory bandwidth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MachineParams {
    pub pi: f64,
    pub beta: f64,
}

impl Default for MachineParams {
    /// Single-core reference node values.
    fn default() -> Self {
        Self {
            pi: 7.8e9,
            beta: 18.4e9,
        }
    }
}

/// Roofline estimate of one stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Roofline {
    pub compute_time: f64,
    pub memory_time: f64,
    /// `min(γ/π, δ/β)`, the formula as printed.
    pub paper_literal: f64,
    /// `max(γ/π, δ/β)`, the conventional runtime bound.
    pub bound: f64,
}

/// Which roof limits a stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Compute,
    Memory,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Compute => "compute",
            Bound::Memory => "memory",
        })
    }
}

impl Roofline {
    /// Label under the printed rule: compute-bound iff the minimum is `γ/π`.
    pub fn literal_bound(&self) -> Bound {
        if self.compute_time <= self.memory_time {
            Bound::Compute
        } else {
            Bound::Memory
        }
    }

    /// Conventional label: the larger of the two times limits the stage.
    pub fn conventional_bound(&self) -> Bound {
        if self.memory_time > self.compute_time {
            Bound::Memory
        } else {
            Bound::Compute
        }
    }
}

pub fn roofline_time(gamma: f64, delta: f64, machine: &MachineParams) -> Roofline {
    let compute_time = gamma / machine.pi;
    let memory_time = delta / machine.beta;
    Roofline {
        compute_time,
        memory_time,
        paper_literal: compute_time.min(memory_time),
        bound: compute_time.max(memory_time),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkParams {
    pub ranks: usize,
    /// Latency in seconds.
    pub alpha: f64,
    /// Bandwidth in bytes per second.
    pub beta_net: f64,
    /// Time of one reduction operation at a tree node, in seconds.
    pub omega: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            ranks: 64,
            alpha: 1e-6,
            beta_net: 12.5e9,
            omega: 1e-6,
        }
    }
}

/// Payload of one reduction message, an `s×(k+s)` matrix of doubles.
pub fn message_bytes(k: u64, s: u64) -> u64 {
    8 * (k * s + s * s)
}

/// `log₂(P)·(ω + d/β + α)`.
pub fn logp_reduction_time(net: &NetworkParams, d: f64) -> f64 {
    (net.ranks.max(1) as f64).log2() * (net.omega + d / net.beta_net + net.alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossover {
    PreferBcgsPipPlus,
    PreferTreeTspqr,
}

impl fmt::Display for Crossover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Crossover::PreferBcgsPipPlus => "prefer-bcgs-pip+",
            Crossover::PreferTreeTspqr => "prefer-tree-tspqr",
        })
    }
}

/// Constants in `ω₊ = c₊(sk+s²)/π` and `ω_TSPQR = c_t(sk²+s²k)/π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossoverConstants {
    pub c_plus: f64,
    pub c_tspqr: f64,
}

impl Default for CrossoverConstants {
    fn default() -> Self {
        Self {
            c_plus: 2.0,
            c_tspqr: 2.0,
        }
    }
}

/// Reduction-operation times `(ω₊, ω_TSPQR)`.
pub fn reduction_op_times(k: u64, s: u64, machine: &MachineParams, c: &CrossoverConstants) -> (f64, f64) {
    let (k, s) = (k as f64, s as f64);
    let plus = c.c_plus * (s * k + s * s) / machine.pi;
    let tspqr = c.c_tspqr * (s * k * k + s * s * k) / machine.pi;
    (plus, tspqr)
}

/// BCGS-PIP+ is preferred iff `2ω₊ + d/β + α < ω_TSPQR`.
pub fn crossover_from_omegas(omega_plus: f64, omega_tspqr: f64, d: f64, net: &NetworkParams) -> Crossover {
    if 2.0 * omega_plus + d / net.beta_net + net.alpha < omega_tspqr {
        Crossover::PreferBcgsPipPlus
    } else {
        Crossover::PreferTreeTspqr
    }
}

pub fn crossover_bcgspip_vs_tspqr(
    net: &NetworkParams,
    machine: &MachineParams,
    c: &CrossoverConstants,
    k: u64,
    s: u64,
) -> Crossover {
    let (plus, tspqr) = reduction_op_times(k, s, machine, c);
    crossover_from_omegas(plus, tspqr, message_bytes(k, s) as f64, net)
}

/// Parses a `key = value` file; `#` starts a comment, blank lines are skipped.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| PqrError::Format(format!("line {}: expected key=value", no + 1)))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| PqrError::Format(format!("line {}: bad number {:?}", no + 1, value.trim())))?;
        out.insert(key.trim().to_string(), value);
    }
    Ok(out)
}

/// Parameters read from files, with defaults for missing keys.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModelParams {
    pub machine: MachineParams,
    pub network: NetworkParams,
    pub constants: CrossoverConstants,
}

impl ModelParams {
    /// Overrides fields from parsed `key=value` pairs. Unknown keys are an error.
    pub fn apply(&mut self, params: &BTreeMap<String, f64>) -> Result<()> {
        for (key, &v) in params {
            match key.as_str() {
                "pi" => self.machine.pi = v,
                "beta" => self.machine.beta = v,
                "P" => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(PqrError::Format(format!("P = {v} is not a rank count")));
                    }
                    self.network.ranks = v as usize;
                }
                "alpha" => self.network.alpha = v,
                "beta_net" => self.network.beta_net = v,
                "omega" => self.network.omega = v,
                "c_plus" => self.constants.c_plus = v,
                "c_tspqr" => self.constants.c_tspqr = v,
                other => return Err(PqrError::Format(format!("unknown key {other:?}"))),
            }
        }
        Ok(())
    }
}
