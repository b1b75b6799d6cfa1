//! `pqr`: experiment front end writing CSV data files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pqr::drivers::block_column_qr;
use pqr::perf::{
    cost_profile, crossover_bcgspip_vs_tspqr, logp_reduction_time, message_bytes, parse_params, roofline_time,
    CostAlg, ModelParams,
};
use pqr::testmat::{ortho_error, residual_error, stewart_matrix, write_matrix, StewartSpec};
use pqr::{Kernel, Matrix, Solver, SolverConfig, TsqrPlan};
use pqr_simcomm::{distributed_block_qr, Reduction};

#[derive(Parser)]
#[command(name = "pqr", version, about = "Block orthogonalization experiments (CSV output)")]
struct Cli {
    /// Worker threads; 1 gives bit-reproducible runs.
    #[arg(long, env = "ORTHO_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orthogonality and residual of block column QR on Stewart matrices.
    Stability(StabilityArgs),
    /// Orthogonality error for every (local, reduction) pair of a tree TSPQR.
    Heatmap(HeatmapArgs),
    /// Flop/byte counts, roofline and LogP estimates.
    Costmodel(CostArgs),
    /// Block column QR distributed over simulated ranks.
    Simrun(SimArgs),
    /// Writes a Stewart matrix in the binary matrix format.
    GenMatrix(GenArgs),
}

#[derive(Args)]
struct Problem {
    /// Rows.
    #[arg(long, default_value_t = 1 << 16)]
    n: usize,
    /// Basis columns before the last block; the matrix has k + s columns.
    #[arg(long, default_value_t = 32)]
    k: usize,
    /// Block width.
    #[arg(long, default_value_t = 4)]
    s: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    problem: Problem,
    /// Condition numbers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1e4")]
    kappa_list: Vec<f64>,
    /// Solvers: a kernel name, tree:<kernel>, tree:<local>/<reduction> or flat:<kernel>.
    #[arg(long, value_delimiter = ',', default_value = "tree:bcgs-pip,tree:bcgs-pip+,tree:hh")]
    solver: Vec<String>,
    #[arg(long, default_value_t = 256)]
    local_rows: usize,
    /// Recursion levels of tree solvers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    levels: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long, value_delimiter = ',', default_value = "bcgs,bmgs,bcgs+,bcgs-pip,bcgs-pip+,hh")]
    local_solvers: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "bcgs,bmgs,bcgs+,bcgs-pip,bcgs-pip+,hh")]
    reduction_solvers: Vec<String>,
    #[arg(long, default_value_t = 1e8)]
    kappa: f64,
    #[arg(long, default_value_t = 256)]
    local_rows: usize,
    #[arg(long, default_value_t = 1)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Algorithms, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "bcgs-pip,bcgs-pip+,hh,tspqr-pip+,tspqr-hh")]
    alg: Vec<String>,
    #[arg(long, default_value_t = 1 << 16)]
    n: u64,
    #[arg(long, default_value_t = 32)]
    k: u64,
    #[arg(long, default_value_t = 4)]
    s: u64,
    /// Columns of the stage-2 coefficient matrix (0: explicit basis, no stage 2).
    #[arg(long, default_value_t = 0)]
    m: u64,
    /// key=value file with pi, beta.
    #[arg(long)]
    machine_file: Option<PathBuf>,
    /// key=value file with P, alpha, beta_net, omega, c_plus, c_tspqr.
    #[arg(long)]
    network_file: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    problem: Problem,
    /// Rank counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    ranks: Vec<usize>,
    /// Per-rank solver, same syntax as for `stability`.
    #[arg(long, default_value = "flat:hh")]
    local: String,
    #[arg(long, default_value_t = 256)]
    local_rows: usize,
    #[arg(long, default_value_t = 1)]
    levels: usize,
    /// Cross-rank reductions: bcgs-pip, bcgs-pip+ or tree:<kernel>.
    #[arg(long, value_delimiter = ',', default_value = "bcgs-pip,bcgs-pip+,tree:hh")]
    reduction: Vec<String>,
    #[arg(long, default_value_t = 1e4)]
    kappa: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot start the thread pool")?;
    let parallel = threads != 1;
    match cli.command {
        Command::Stability(a) => stability(&a, parallel),
        Command::Heatmap(a) => heatmap(&a, parallel),
        Command::Costmodel(a) => costmodel(&a),
        Command::Simrun(a) => simrun(&a, parallel),
        Command::GenMatrix(a) => gen_matrix(&a),
    }
}

fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn output(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn kernel(name: &str) -> Result<Kernel> {
    Ok(name.parse::<Kernel>()?)
}

/// Solver from its name; `levels` applies to tree solvers only.
fn solver(spec: &str, local_rows: usize, levels: usize, parallel: bool) -> Result<Solver> {
    if let Some(rest) = spec.strip_prefix("tree:") {
        let (local, reduction) = rest.split_once('/').unwrap_or((rest, rest));
        let plan = TsqrPlan::new(Solver::Kernel(kernel(local)?), kernel(reduction)?)
            .with_local_rows(local_rows)
            .with_levels(levels)
            .with_parallel(parallel);
        return Ok(Solver::tree(plan));
    }
    if let Some(local) = spec.strip_prefix("flat:") {
        let k = kernel(local)?;
        return Ok(Solver::flat(TsqrPlan::new(Solver::Kernel(k), k).with_local_rows(local_rows)));
    }
    Ok(Solver::Kernel(kernel(spec)?))
}

fn stewart(p: &Problem, kappa: f64) -> Result<Matrix> {
    Ok(stewart_matrix(&StewartSpec::new(p.n, p.k + p.s, kappa, p.seed))?)
}

fn stability(a: &StabilityArgs, parallel: bool) -> Result<()> {
    let mut runs = Vec::new();
    for name in &a.solver {
        if name.starts_with("tree:") {
            for &l in &a.levels {
                runs.push((name.as_str(), l, solver(name, a.local_rows, l, parallel)?));
            }
        } else {
            runs.push((name.as_str(), 0, solver(name, a.local_rows, 0, parallel)?));
        }
    }
    let cfg = SolverConfig::default();
    let mut w = output(a.out.as_deref())?;
    w.write_record([
        "solver", "kappa", "n", "k", "s", "levels", "local_rows", "e_perp", "residual", "seed",
    ])?;
    for &kappa in &a.kappa_list {
        let m = stewart(&a.problem, kappa)?;
        for (name, levels, sol) in &runs {
            let f = block_column_qr(&m, a.problem.s, sol, &cfg).with_context(|| format!("solver {name}"))?;
            let local_rows = if matches!(sol, Solver::Kernel(_)) { a.problem.n } else { a.local_rows };
            w.write_record([
                name.to_string(),
                sci(kappa),
                a.problem.n.to_string(),
                a.problem.k.to_string(),
                a.problem.s.to_string(),
                levels.to_string(),
                local_rows.to_string(),
                sci(ortho_error(&f.q)),
                sci(residual_error(&m, &f.q, f.r.as_matrix())?),
                a.problem.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn heatmap(a: &HeatmapArgs, parallel: bool) -> Result<()> {
    let locals: Vec<Kernel> = a.local_solvers.iter().map(|s| kernel(s)).collect::<Result<_>>()?;
    let reductions: Vec<Kernel> = a.reduction_solvers.iter().map(|s| kernel(s)).collect::<Result<_>>()?;
    let m = stewart(&a.problem, a.kappa)?;
    let cfg = SolverConfig::default();
    let mut w = output(a.out.as_deref())?;
    let mut header = vec!["local\\reduction".to_string()];
    header.extend(reductions.iter().map(|k| k.to_string()));
    w.write_record(&header)?;
    for &l in &locals {
        let mut row = vec![l.to_string()];
        for &r in &reductions {
            let plan = TsqrPlan::new(Solver::Kernel(l), r)
                .with_local_rows(a.local_rows)
                .with_levels(a.levels)
                .with_parallel(parallel);
            let f = block_column_qr(&m, a.problem.s, &Solver::tree(plan), &cfg)?;
            row.push(sci(ortho_error(&f.q)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_params(path: Option<&Path>, into: &mut ModelParams) -> Result<()> {
    if let Some(p) = path {
        let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        into.apply(&parse_params(&text)?)
            .with_context(|| format!("in {}", p.display()))?;
    }
    Ok(())
}

fn costmodel(a: &CostArgs) -> Result<()> {
    let algs: Vec<CostAlg> = a
        .alg
        .iter()
        .map(|s| Ok(s.parse::<CostAlg>()?))
        .collect::<Result<_>>()?;
    if a.n == 0 || a.s == 0 {
        bail!("n and s must be positive");
    }
    let mut params = ModelParams::default();
    read_params(a.machine_file.as_deref(), &mut params)?;
    read_params(a.network_file.as_deref(), &mut params)?;
    let d = message_bytes(a.k, a.s);
    let logp = logp_reduction_time(&params.network, d as f64);
    let verdict = crossover_bcgspip_vs_tspqr(&params.network, &params.machine, &params.constants, a.k, a.s);
    let mut w = output(a.out.as_deref())?;
    w.write_record([
        "alg",
        "n",
        "k",
        "s",
        "m",
        "gamma1",
        "delta1",
        "gamma2",
        "delta2",
        "roofline1_literal",
        "roofline1_bound",
        "roofline2_literal",
        "roofline2_bound",
        "stage1_literal_class",
        "stage1_conventional_class",
        "message_bytes",
        "logp_time",
        "ranks",
        "crossover",
    ])?;
    for alg in algs {
        let p = cost_profile(alg, a.n, a.k, a.s, a.m)?;
        let r1 = roofline_time(p.gamma1 as f64, p.delta1 as f64, &params.machine);
        let r2 = roofline_time(p.gamma2 as f64, p.delta2 as f64, &params.machine);
        w.write_record([
            alg.name().to_string(),
            a.n.to_string(),
            a.k.to_string(),
            a.s.to_string(),
            a.m.to_string(),
            p.gamma1.to_string(),
            p.delta1.to_string(),
            p.gamma2.to_string(),
            p.delta2.to_string(),
            sci(r1.paper_literal),
            sci(r1.bound),
            sci(r2.paper_literal),
            sci(r2.bound),
            r1.literal_bound().to_string(),
            r1.conventional_bound().to_string(),
            d.to_string(),
            sci(logp),
            params.network.ranks.to_string(),
            verdict.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn simrun(a: &SimArgs, parallel: bool) -> Result<()> {
    let local = solver(&a.local, a.local_rows, a.levels, parallel)?;
    let reductions: Vec<Reduction> = a
        .reduction
        .iter()
        .map(|s| Ok(s.parse::<Reduction>()?))
        .collect::<Result<_>>()?;
    let m = stewart(&a.problem, a.kappa)?;
    let cfg = SolverConfig::default();
    let mut w = output(a.out.as_deref())?;
    w.write_record([
        "ranks",
        "local",
        "reduction",
        "n",
        "k",
        "s",
        "kappa",
        "e_perp",
        "residual",
        "syncs",
        "reduce_rounds",
        "messages",
        "bytes_up",
        "bytes_down",
        "reduction_ops",
        "seed",
    ])?;
    for &ranks in &a.ranks {
        for &reduction in &reductions {
            let d = distributed_block_qr(&m, ranks, a.problem.s, &local, reduction, &cfg)
                .with_context(|| format!("{ranks} ranks, reduction {reduction}"))?;
            w.write_record([
                ranks.to_string(),
                a.local.clone(),
                reduction.to_string(),
                a.problem.n.to_string(),
                a.problem.k.to_string(),
                a.problem.s.to_string(),
                sci(a.kappa),
                sci(ortho_error(&d.q)),
                sci(residual_error(&m, &d.q, d.r.as_matrix())?),
                d.stats.syncs.to_string(),
                d.stats.message_rounds.to_string(),
                d.stats.messages.to_string(),
                d.stats.bytes_up.to_string(),
                d.stats.bytes_down.to_string(),
                d.stats.reduction_ops.to_string(),
                a.problem.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn gen_matrix(a: &GenArgs) -> Result<()> {
    let m = stewart_matrix(&StewartSpec::new(a.n, a.m, a.kappa, a.seed))?;
    let file = File::create(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write_matrix(BufWriter::new(file), &m)?;
    Ok(())
}
