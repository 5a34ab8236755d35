//! Command-line front end: instance generation, solving, advice simulation,
//! the separation reduction, and batch benchmarks.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dualbin::advice::simulate;
use dualbin::exact::{brute_force_opt_with_guard, DEFAULT_MAX_BRUTE_FORCE_ITEMS};
use dualbin::experiment::{
    generate_instance, parse_list, run_experiment, Algorithm, ExperimentConfig, Family, GenParams,
};
use dualbin::greedy::{first_fit, first_fit_increasing, rsff};
use dualbin::online::{FirstFitOnline, OnlineAlgorithm, RandomPlacement, ReplayPacking};
use dualbin::ptas::ptas_solve;
use dualbin::reduction::{
    construct, pairing_packing, reduce_and_run, BspInstance, ReductionReport,
};
use dualbin::{verify_packing, Instance, Packing, Weight};

#[derive(Parser)]
#[command(
    name = "dualbin",
    version,
    about = "Dual bin packing: solvers, advice simulation, experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run algorithms on an instance file.
    Solve(SolveArgs),
    /// Run the advice oracle and online player on an instance file.
    Simulate(SimulateArgs),
    /// Feed a binary separation instance through online packing algorithms.
    Reduce(ReduceArgs),
    /// Batch experiment written as CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "uniform")]
    family: String,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    s: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Weight cap of the small-heavy family.
    #[arg(long, default_value = "1/2^3")]
    eps: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[arg(long, default_value = "ff,ffi,rsff,ptas")]
    algos: String,
    #[arg(long, default_value = "1/2^2")]
    eps: String,
    /// Also compute the optimum by exhaustive search.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    input: PathBuf,
    #[arg(long, default_value = "1/2^2")]
    eps: String,
    #[arg(long)]
    oracle: bool,
    /// Where to write the per-item transcript.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Separation instance file; a random one is drawn when omitted.
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Any of ff, random, optimal.
    #[arg(long, default_value = "ff,random,optimal")]
    algos: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "uniform")]
    family: String,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    s: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Comma-separated eps grid.
    #[arg(long, default_value = "1/2^2,1/2^1")]
    eps: String,
    #[arg(long, default_value = "ff,ffi,rsff,ptas,advice")]
    algos: String,
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 20)]
    oracle_max_items: usize,
    /// Add a wall-time column (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_eps(s: &str) -> Result<Weight> {
    let eps: Weight = s.parse()?;
    if eps.is_zero() || eps >= Weight::one() {
        bail!("eps must lie in (0, 1), got {eps}");
    }
    Ok(eps)
}

/// 1-based bins, `-` for rejected items.
fn format_assignment(p: &Packing) -> String {
    p.assignment()
        .iter()
        .map(|a| a.map_or("-".to_string(), |b| (b + 1).to_string()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn oracle_opt(inst: &Instance, enabled: bool) -> Option<usize> {
    if !enabled {
        return None;
    }
    brute_force_opt_with_guard(inst, DEFAULT_MAX_BRUTE_FORCE_ITEMS)
        .ok()
        .map(|r| r.opt)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let family: Family = a.family.parse()?;
    let inst = generate_instance(
        family,
        &GenParams {
            n: a.n,
            m: a.m,
            s: a.s,
            seed: a.seed,
            small_cap: parse_eps(&a.eps)?,
        },
    )?;
    emit(a.out.as_deref(), &inst.serialize())
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let inst = read_instance(&a.input)?;
    let eps = parse_eps(&a.eps)?;
    let mut text = format!("n {} m {} s {}\n", inst.len(), inst.bins(), inst.bit_size());
    let opt = oracle_opt(&inst, a.oracle);
    if a.oracle {
        match opt {
            Some(o) => text.push_str(&format!("opt {o}\n")),
            None => text.push_str("opt unavailable (instance too large)\n"),
        }
    }
    for alg in parse_list::<Algorithm>(&a.algos)? {
        let (packing, note) = match alg {
            Algorithm::Ff => (first_fit(&inst, None, None)?, String::new()),
            Algorithm::Ffi => (first_fit_increasing(&inst), String::new()),
            Algorithm::Rsff => {
                let r = rsff(&inst);
                let eta = r.eta.map_or("absent".into(), |e| e.to_string());
                (r.packing, format!(" eta {eta}"))
            }
            Algorithm::Ptas => {
                let o = ptas_solve(&inst, &eps)?;
                (o.packing, format!(" branch {}", o.branch.label()))
            }
            Algorithm::AdviceSim => {
                let r = simulate(&inst, &eps, opt)?;
                let note = format!(" mode {} bits {}", r.advice.mode_label(), r.advice_bits);
                (r.transcript.packing, note)
            }
        };
        let rep = verify_packing(&inst, &packing)?;
        if !rep.feasible {
            bail!("{alg} produced an infeasible packing");
        }
        text.push_str(&format!(
            "{alg} packed {}{note}\n  {}\n",
            rep.packed_count,
            format_assignment(&packing)
        ));
    }
    emit(a.out.as_deref(), &text)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let inst = read_instance(&a.input)?;
    let eps = parse_eps(&a.eps)?;
    let opt = oracle_opt(&inst, a.oracle);
    let r = simulate(&inst, &eps, opt)?;
    println!("mode {}", r.advice.mode_label());
    println!("advice_bits {}", r.advice_bits);
    println!("online_count {}", r.online_count);
    println!("offline_count {}", r.offline_count);
    if let Some(o) = r.opt {
        println!("opt {o}");
    }
    if let Some(ratio) = r.ratio() {
        println!("ratio {ratio:.6}");
    }
    match a.out {
        Some(p) => emit(Some(&p), &r.transcript.to_log())?,
        None => print!("{}", r.transcript.to_log()),
    }
    Ok(())
}

fn cmd_reduce(a: ReduceArgs) -> Result<()> {
    let bsp = match &a.input {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            BspInstance::parse(&text)?
        }
        None => BspInstance::seeded(a.seed, a.n),
    };
    let n = bsp.n();
    let mut text = format!(
        "algorithm,n,n1,mistakes,{}\n",
        ReductionReport::csv_header()
    );
    for name in a.algos.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let mut alg: Box<dyn OnlineAlgorithm> = match name {
            "ff" => Box::new(FirstFitOnline::new(n)),
            "random" => Box::new(RandomPlacement::new(n, a.seed, 100)),
            "optimal" => {
                let c = construct(&bsp)?;
                Box::new(ReplayPacking::new(&pairing_packing(&bsp, &c)))
            }
            other => bail!("unknown reduction algorithm {other:?} (ff, random, optimal)"),
        };
        let run = reduce_and_run(&bsp, alg.as_mut())?;
        let r = &run.report;
        text.push_str(&format!(
            "{name},{n},{},{},{}\n",
            r.n1,
            r.mistakes,
            r.csv_row()
        ));
    }
    emit(a.out.as_deref(), &text)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    let eps = a
        .eps
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_eps)
        .collect::<Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        family: a.family.parse()?,
        n: a.n,
        m: a.m,
        s: a.s,
        seed: a.seed,
        count: a.count,
        algorithms: parse_list(&a.algos)?,
        eps,
        oracle: a.oracle,
        max_oracle_items: a.oracle_max_items,
        timing: a.timing,
        threads: a.threads,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg)?;
    emit(a.out.as_deref(), &report.to_csv()?)?;
    let bad = report.violations();
    if bad > 0 {
        eprintln!("{bad} rows violated an invariant");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(a) => cmd_gen(a)?,
        Command::Solve(a) => cmd_solve(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Reduce(a) => cmd_reduce(a)?,
        Command::Bench(a) => return cmd_bench(a),
    }
    Ok(ExitCode::SUCCESS)
}
