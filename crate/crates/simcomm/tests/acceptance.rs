//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p pqr-simcomm --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use pqr::drivers::block_column_qr;
use pqr::linalg::{canonical_r, matmul, reference_qr};
use pqr::perf::{cost_profile, logp_reduction_time, roofline_time, CostAlg, MachineParams, NetworkParams};
use pqr::testmat::{ortho_error, residual_error, stewart_matrix, StewartSpec};
use pqr::{Kernel, Matrix, Solver, SolverConfig, TsqrPlan};
use pqr_simcomm::{distributed_block_qr, Reduction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const SEED: u64 = 7;
const S: usize = 4;
const N_TABLE: usize = 1 << 16;
const K_TABLE: usize = 32;
const LOCAL_ROWS: usize = 256;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn stewart(rows: usize, cols: usize, kappa: f64, seed: u64) -> Matrix {
    stewart_matrix(&StewartSpec::new(rows, cols, kappa, seed)).unwrap()
}

fn tree(local: Kernel, reduction: Kernel, rows: usize, levels: usize) -> Solver {
    Solver::tree(
        TsqrPlan::new(Solver::Kernel(local), reduction)
            .with_local_rows(rows)
            .with_levels(levels)
            .with_parallel(true),
    )
}

fn qr_errors(solver: &Solver, a: &Matrix) -> (f64, f64) {
    let f = block_column_qr(a, S, solver, &SolverConfig::default()).unwrap();
    (ortho_error(&f.q), residual_error(a, &f.q, f.r.as_matrix()).unwrap())
}

fn slope(kappas: &[f64], errs: &[f64]) -> f64 {
    let x: Vec<f64> = kappas.iter().map(|k| k.log10()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.log10()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn stability_ladder() -> Outcome {
    let start = Instant::now();
    let kappas = [1e2, 1e4, 1e6, 1e8];
    let mats: Vec<Matrix> = kappas.iter().map(|&k| stewart(4096, 64, k, SEED)).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for kernel in Kernel::ALL {
        let errs: Vec<f64> = mats.iter().map(|a| qr_errors(&Solver::Kernel(kernel), a).0).collect();
        match kernel {
            Kernel::Bcgs | Kernel::BcgsPip | Kernel::Bmgs => {
                let fit = slope(&kappas, &errs);
                let band = if kernel == Kernel::Bmgs { 0.5..=1.5 } else { 1.5..=2.5 };
                pass &= band.contains(&fit);
                detail.push(format!("{kernel} slope {fit:.2}"));
            }
            _ => {
                let worst = errs[..3].iter().cloned().fold(0.0, f64::max);
                pass &= worst <= 1e-12;
                detail.push(format!("{kernel} max e_perp {worst:.2e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    outcome(pass, format!("{}; {secs:.1}s", detail.join(", ")))
}

fn table_1a() -> Outcome {
    let start = Instant::now();
    let a = stewart(N_TABLE, K_TABLE + S, 1e4, SEED);
    let mut pass = true;
    let mut detail = Vec::new();
    for sub in [Kernel::BcgsPip, Kernel::BcgsPipPlus, Kernel::Householder] {
        let mut e_max: f64 = 0.0;
        let mut e_min = f64::INFINITY;
        let mut r_max: f64 = 0.0;
        for levels in 0..=4 {
            let (e, r) = qr_errors(&tree(sub, sub, LOCAL_ROWS, levels), &a);
            e_max = e_max.max(e);
            e_min = e_min.min(e);
            r_max = r_max.max(r);
        }
        if sub == Kernel::BcgsPip {
            pass &= e_min >= 1e-11 && e_max <= 1e-7;
        } else {
            pass &= e_max <= 1e-13 && r_max <= 1e-13;
        }
        detail.push(format!("{sub} e_perp [{e_min:.2e}, {e_max:.2e}] residual <= {r_max:.2e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    outcome(pass, format!("{}; {secs:.1}s", detail.join(", ")))
}

fn heatmap() -> Outcome {
    let a = stewart(N_TABLE, K_TABLE + S, 1e8, SEED);
    let unstable = |k: Kernel| matches!(k, Kernel::Bcgs | Kernel::BcgsPip);
    let mut pass = true;
    let mut min_unstable = f64::INFINITY;
    let mut max_stable: f64 = 0.0;
    for local in Kernel::ALL {
        for reduction in Kernel::ALL {
            let e = qr_errors(&tree(local, reduction, LOCAL_ROWS, 1), &a).0;
            if unstable(local) || unstable(reduction) {
                pass &= e >= 1e-4;
                min_unstable = min_unstable.min(e);
            } else if local.is_stable() && reduction.is_stable() {
                pass &= e <= 1e-11;
                max_stable = max_stable.max(e);
            }
        }
    }
    outcome(
        pass,
        format!("min e_perp with BCGS/BCGS-PIP {min_unstable:.2e}, max e_perp all-stable {max_stable:.2e}"),
    )
}

fn partition_insensitivity() -> Outcome {
    let a = stewart(N_TABLE, K_TABLE + S, 1e4, SEED);
    let mut pass = true;
    let mut detail = Vec::new();
    for sub in [Kernel::BcgsPip, Kernel::BcgsPipPlus, Kernel::Householder] {
        let errs: Vec<f64> = (3..=10)
            .map(|e| qr_errors(&tree(sub, sub, N_TABLE >> e, 2), &a).0)
            .collect();
        let max = errs.iter().cloned().fold(0.0, f64::max);
        let min = errs.iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= max / min <= 100.0;
        detail.push(format!("{sub} ratio {:.2}", max / min));
    }
    outcome(pass, detail.join(", "))
}

fn canonical_pn(n1: &Matrix, p: &Matrix, n: &Matrix) -> (Matrix, Matrix) {
    let d: Vec<f64> = n1.diag().iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    (Matrix::from_fn(p.rows(), p.cols(), |i, j| d[i] * p[(i, j)]), canonical_r(n))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let cfg = SolverConfig::default();
    let mut worst_coeff: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(0..=32usize);
        let s = rng.random_range(1..=8usize);
        let n = rng.random_range(2 * (k + s)..=512);
        let kappa = 10f64.powf(rng.random_range(0.0..=3.0));
        let a = stewart(n, k + s, kappa, rng.random());
        let (a1, x) = (a.columns(0..k), a.columns(k..k + s));
        let (_, r_ref) = reference_qr(&a).unwrap();
        let r_ref = r_ref.into_inner();
        let (p_ref, n_ref) = (r_ref.block(0..k, k..k + s), r_ref.block(k..k + s, k..k + s));

        let rows = 2 * (k + s);
        let mut solvers: Vec<Solver> = Kernel::ALL.iter().map(|&k| Solver::Kernel(k)).collect();
        solvers.push(tree(Kernel::Householder, Kernel::Householder, rows, 1));
        solvers.push(tree(Kernel::BcgsPipPlus, Kernel::BcgsPipPlus, rows, 1));
        solvers.push(Solver::flat(
            TsqrPlan::new(Solver::Kernel(Kernel::Householder), Kernel::Householder).with_local_rows(rows),
        ));
        for solver in &solvers {
            let mut basis = solver.empty_basis(n).unwrap();
            let n1 = if k > 0 {
                solver.extend(&mut basis, &a1, &cfg).unwrap().n.into_inner()
            } else {
                Matrix::zeros(0, 0)
            };
            let res = solver.extend(&mut basis, &x, &cfg).unwrap();
            let (p, nn) = canonical_pn(&n1, &res.p, res.n.as_matrix());
            if k > 0 {
                worst_coeff = worst_coeff.max(p.sub(&p_ref).unwrap().max_abs());
            }
            worst_coeff = worst_coeff.max(nn.sub(&n_ref).unwrap().max_abs());

            let q = basis.assemble(0..k).unwrap();
            let u = basis.assemble(k..k + s).unwrap();
            let mut r = x.sub(&matmul(&q, &res.p, false).unwrap()).unwrap();
            r = r.sub(&matmul(&u, res.n.as_matrix(), false).unwrap()).unwrap();
            worst_residual = worst_residual.max(r.frobenius_norm() / x.frobenius_norm());
        }
    }
    outcome(
        worst_coeff <= 1e-8 && worst_residual <= 1e-10,
        format!("max |(P,N) - oracle| {worst_coeff:.2e}, max residual/|X| {worst_residual:.2e}"),
    )
}

/// Cost formulas evaluated directly: (γ₁, δ₁, γ₂, δ₂).
fn hand_costs(alg: CostAlg, n: u128, k: u128, s: u128, m: u128) -> [u128; 4] {
    let explicit_stage2 = if m == 0 { [0, 0] } else { [2 * (k + s) * m * n, 8 * (k + s) * n] };
    match alg {
        CostAlg::BcgsPip => [(4 * s * k + 6 * s * s) * n, 16 * (k + s) * n, explicit_stage2[0], explicit_stage2[1]],
        CostAlg::BcgsPipPlus => [(8 * s * k + 12 * s * s) * n, 32 * (k + s) * n, explicit_stage2[0], explicit_stage2[1]],
        CostAlg::Householder => [
            (4 * k * s + 2 * s * s - 2 * s) * n,
            16 * (k * (s + 1) + s * s - s) * n,
            4 * (k + s) * s * n,
            16 * (k + s) * (s + 1) * n,
        ],
        CostAlg::TspqrPipPlus => [(8 * s * k + 12 * s * s) * n, 8 * (k + s) * n, 2 * (s * k + s * s) * n, 8 * (k + s) * n],
        CostAlg::TspqrHouseholder => [(4 * s * k + 2 * s * s) * n, 8 * (k + s) * n, 4 * (s * k + s * s) * n, 8 * (k + s) * n],
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn cost_model() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED + 1);
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(1..=1u64 << 24);
        let k = rng.random_range(0..=512u64);
        let s = rng.random_range(1..=64u64);
        let m = rng.random_range(0..=128u64);
        let machine = MachineParams {
            pi: rng.random_range(1e9..1e12),
            beta: rng.random_range(1e9..1e12),
        };
        let net = NetworkParams {
            ranks: rng.random_range(1..=4096),
            alpha: rng.random_range(1e-7..1e-4),
            beta_net: rng.random_range(1e9..1e11),
            omega: rng.random_range(1e-8..1e-5),
        };
        for alg in CostAlg::ALL {
            let p = cost_profile(alg, n, k, s, m).unwrap();
            let want = hand_costs(alg, n as u128, k as u128, s as u128, m as u128);
            if [p.gamma1, p.delta1, p.gamma2, p.delta2] != want {
                mismatches += 1;
            }
            for (g, d) in [(want[0], want[1]), (want[2], want[3])] {
                let (g, d) = (g as f64, d as f64);
                let r = roofline_time(g, d, &machine);
                let (tc, tm) = (g / machine.pi, d / machine.beta);
                worst = worst.max(rel(r.paper_literal, if tc < tm { tc } else { tm }));
                worst = worst.max(rel(r.bound, if tc > tm { tc } else { tm }));
            }
        }
        let d = (8 * (k * s + s * s)) as f64;
        let want = (net.ranks as f64).ln() / std::f64::consts::LN_2 * (net.omega + d / net.beta_net + net.alpha);
        worst = worst.max(rel(logp_reduction_time(&net, d), want));
    }
    outcome(
        mismatches == 0 && worst <= 1e-12,
        format!("{mismatches} integer mismatches over 20 tuples x 5 algorithms, max relative time error {worst:.1e}"),
    )
}

fn flat_hh(rows: usize) -> Solver {
    Solver::flat(TsqrPlan::new(Solver::Kernel(Kernel::Householder), Kernel::Householder).with_local_rows(rows))
}

fn synchronizations() -> Outcome {
    let a = stewart(8192, K_TABLE + S, 1e4, SEED);
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut seen = Vec::new();
    for p in [2, 4, 8] {
        for (reduction, want) in [(Reduction::Pip, 1), (Reduction::PipPlus, 2)] {
            let d = distributed_block_qr(&a, p, S, &flat_hh(LOCAL_ROWS), reduction, &cfg).unwrap();
            pass &= d.syncs_per_solve.iter().all(|&c| c == want);
            seen.push(format!("P={p} {reduction}: {:?}", d.syncs_per_solve.iter().max().unwrap()));
        }
    }
    outcome(pass, format!("syncs per solve {}", seen.join(", ")))
}

fn rounds_monotone() -> Outcome {
    let a = stewart(2048, 8, 1e2, SEED);
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut last = 0;
    let mut per_p = Vec::new();
    for p in [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64] {
        let d = distributed_block_qr(&a, p, S, &flat_hh(32), Reduction::Pip, &cfg).unwrap();
        let rounds = if d.stats.syncs == 0 { 0 } else { d.stats.message_rounds / d.stats.syncs };
        pass &= rounds == (p as f64).log2().ceil() as usize && rounds >= last;
        last = rounds;
        per_p.push(format!("{p}:{rounds}"));
    }
    outcome(pass, format!("rounds per reduce (P:rounds) {}", per_p.join(" ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("stability ladder", stability_ladder),
        ("recursion levels at n=2^16, kappa=1e4", table_1a),
        ("local/reduction heatmap at kappa=1e8", heatmap),
        ("subproblem count insensitivity", partition_insensitivity),
        ("oracle equivalence on 100 random instances", oracle_equivalence),
        ("cost model fidelity", cost_model),
        ("single synchronization per reduce", synchronizations),
        ("reduce rounds grow as ceil(log2 P)", rounds_monotone),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {}: {name} ({})", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
