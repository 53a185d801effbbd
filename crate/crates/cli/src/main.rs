//! `afista`: generate instances, run single solves, run experiment grids and
//! execute the validation suite.
//!
//! Exit codes: 0 on success, 1 when a validation check or a run fails,
//! 2 on usage errors (bad flags or out-of-range values).

use std::path::PathBuf;
use std::process::ExitCode;

use afista::harness::{emit_csv, run_algorithm, run_experiment, write_csv, ExperimentConfig, RHat};
use afista::instance::QuadraticInstance;
use afista::trace::{Algorithm, RunTrace};
use afista::validation;
use clap::{Args, Parser, Subcommand};

const OUT_DIR_ENV: &str = "AFISTA_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "afista-out";

#[derive(Parser, Debug)]
#[command(name = "afista", version, about = "Accelerated Frank-Wolfe solvers and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a quadratic simplex instance and write it as JSON.
    GenInstance(GenInstanceArgs),
    /// Run one algorithm on one instance and print a trace summary.
    Solve(SolveArgs),
    /// Run an experiment grid and write per-cell CSVs plus a manifest.
    Sweep(SweepArgs),
    /// Run the property checks and report pass/fail per property.
    Validate,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Dimension of the simplex.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..=100_000))]
    n: u64,
    /// Support size of the planted optimum [default: min(10, n)].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    r: Option<u64>,
    /// Strict-complementarity margin.
    #[arg(long, default_value_t = 1.0, value_parser = nonnegative)]
    delta: f64,
    /// Largest eigenvalue of the Hessian.
    #[arg(long, default_value_t = 100.0, value_parser = positive)]
    beta: f64,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceArgs {
    fn generate(&self) -> Result<QuadraticInstance<f64>, Failure> {
        let n = self.n as usize;
        let r = self.r.map_or(n.min(10), |r| r as usize);
        if r > n {
            return Err(Failure::Usage(format!("--r {r} exceeds --n {n}")));
        }
        Ok(QuadraticInstance::generate(n, r, self.delta, self.beta, self.seed)?)
    }
}

#[derive(Args, Debug)]
struct GenInstanceArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Output file [default: <out-dir>/instance_n<n>_r<r>_delta<delta>_seed<seed>.json].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Load the instance from a file instead of generating it.
    #[arg(long)]
    instance_file: Option<PathBuf>,
    /// Algorithm: afw, sp-afw, sp-fw, exact, cgs or fw.
    #[arg(long, default_value = "afw", value_parser = algorithm)]
    algo: Algorithm,
    /// Outer iterations T.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(2..=10_000_000))]
    outer_iters: u64,
    /// Sparsity for sparse projections [default: r].
    #[arg(long)]
    r_hat: Option<usize>,
    /// Also write the full trace as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Use the default grid (n = 200, r in {10, 20, 40, 80}, delta in
    /// {0, 0.1, 1}, beta = 100, T = 2000, seeds 0..10, all baselines).
    #[arg(long, conflicts_with_all = ["n", "r", "delta", "beta", "outer_iters", "seeds", "algo", "r_hat"])]
    defaults: bool,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=100_000))]
    n: Option<u64>,
    /// Comma-separated support sizes.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    r: Option<Vec<u64>>,
    /// Comma-separated margins.
    #[arg(long, value_delimiter = ',', value_parser = nonnegative)]
    delta: Option<Vec<f64>>,
    #[arg(long, value_parser = positive)]
    beta: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=10_000_000))]
    outer_iters: Option<u64>,
    /// Seeds as `a..b` (half-open) or a comma-separated list.
    #[arg(long, value_parser = seeds)]
    seeds: Option<SeedList>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', value_parser = algorithm)]
    algo: Option<Vec<Algorithm>>,
    /// Fixed sparsity for sparse projections [default: r of each cell].
    #[arg(long)]
    r_hat: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
}

impl SweepArgs {
    fn config(&self) -> ExperimentConfig {
        let mut config = ExperimentConfig {
            workers: self.workers,
            ..ExperimentConfig::default()
        };
        if self.defaults {
            return config;
        }
        if let Some(n) = self.n {
            config.n = n as usize;
        }
        if let Some(r) = &self.r {
            config.r_values = r.iter().map(|&r| r as usize).collect();
        }
        if let Some(delta) = &self.delta {
            config.delta_values = delta.clone();
        }
        if let Some(beta) = self.beta {
            config.beta = beta;
        }
        if let Some(t) = self.outer_iters {
            config.outer_iters = t as usize;
        }
        if let Some(seeds) = &self.seeds {
            config.seeds = seeds.0.clone();
        }
        if let Some(algo) = &self.algo {
            config.algorithms = algo.clone();
        }
        if let Some(r_hat) = self.r_hat {
            config.r_hat = RHat::Fixed(r_hat);
        }
        config
    }
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn seeds(s: &str) -> Result<SeedList, String> {
    let list = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
        (a..b).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad seed {p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?
    };
    if list.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(SeedList(list))
}

fn algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: afista::Error| e.to_string())
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn positive(s: &str) -> Result<f64, String> {
    finite(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err("must be positive".into()) })
}

fn nonnegative(s: &str) -> Result<f64, String> {
    finite(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be nonnegative".into()) })
}

enum Failure {
    /// Bad input that the flag parser could not catch.
    Usage(String),
    /// A run or a check failed.
    Run(String),
}

impl From<afista::Error> for Failure {
    fn from(e: afista::Error) -> Self {
        match e {
            afista::Error::InvalidInput(_) | afista::Error::Unsupported { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn gen_instance(args: &GenInstanceArgs) -> Result<(), Failure> {
    let inst = args.instance.generate()?;
    let m = inst.meta;
    let path = args.out.clone().unwrap_or_else(|| {
        args.out_dir
            .join(format!("instance_n{}_r{}_delta{}_seed{}.json", m.n, m.r, m.delta, m.seed))
    });
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Failure::Run(format!("{}: {e}", parent.display())))?;
    }
    inst.save(&path)?;
    println!("wrote {} (n={}, r={}, delta={}, beta={}, seed={}, f*={:.16e})", path.display(), m.n, m.r, m.delta, m.beta, m.seed, inst.f_star);
    Ok(())
}

fn reach(trace: &RunTrace, eps: f64) -> String {
    trace
        .rows
        .iter()
        .find(|r| r.error <= eps)
        .map_or_else(|| "-".to_string(), |r| format!("t={} loo_equiv={}", r.outer_iter, r.loo_equiv))
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let inst = match &args.instance_file {
        Some(path) => QuadraticInstance::load(path)?,
        None => args.instance.generate()?,
    };
    let r_hat = args.r_hat.unwrap_or(inst.meta.r);
    let out = run_algorithm(args.algo, &inst, args.outer_iters as usize, r_hat, true)?;
    let t = &out.trace;
    let m = inst.meta;
    println!("algorithm   {}", t.algorithm);
    println!("instance    n={} r={} delta={} beta={} seed={}", m.n, m.r, m.delta, m.beta, m.seed);
    println!("status      {}", t.status.label());
    println!("iterations  {}", t.rows.len());
    println!("h0          {:.6e}", t.initial_error);
    println!("h           {:.6e}", t.final_error());
    println!(
        "calls       fo={} loo={} sparse_proj={} exact_proj={} loo_equiv={}",
        out.counts.fo,
        out.counts.loo,
        out.counts.sparse_proj,
        out.counts.exact_proj,
        out.counts.loo_equivalents(t.r_hat)
    );
    println!("reach 1e-4  {}", reach(t, 1e-4));
    println!("reach 1e-6  {}", reach(t, 1e-6));
    if let Some(path) = &args.csv {
        write_csv(std::slice::from_ref(t), path)?;
        println!("trace       {}", path.display());
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let config = args.config();
    config.validate()?;
    let traces = run_experiment(&config)?;
    for t in &traces {
        let m = t.instance.expect("harness traces carry metadata");
        eprintln!(
            "{:<14} r={:<3} delta={:<4} seed={:<3} {:<10} h={:.3e}",
            t.algorithm.label(),
            m.r,
            m.delta,
            m.seed,
            t.status.label(),
            t.final_error()
        );
    }
    let paths = emit_csv(&traces, &args.out_dir, Some(&config))?;
    println!("{} runs, {} cell files in {}", traces.len(), paths.len(), args.out_dir.display());
    let aborted = traces.iter().filter(|t| !t.is_completed()).count();
    if aborted > 0 {
        return Err(Failure::Run(format!("{aborted} runs aborted; see manifest.json")));
    }
    Ok(())
}

fn validate() -> Result<(), Failure> {
    let checks = validation::quick_suite();
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(Failure::Run(format!("{failed} checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenInstance(args) => gen_instance(args),
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Validate => validate(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: afista <gen-instance|solve|sweep|validate> [flags]; see afista --help");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
