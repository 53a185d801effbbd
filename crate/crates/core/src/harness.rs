//! Seeded experiment grids over generated simplex instances, CSV traces
//! and seed-averaged curves.
//!
//! Output layout for a grid written with [`emit_csv`]:
//!
//! * `cell_r{r}_delta{delta}.csv`: every trace row of that `(r, delta)` cell,
//!   floats in 17-significant-digit scientific notation;
//! * `cell_r{r}_delta{delta}.timing.csv`: per-row wall-clock times, kept
//!   apart so the main files are byte-identical across reruns;
//! * `manifest.json`: the configuration, library version and file list.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::{afista_run, AfistaConfig, Schedule};
use crate::error::{invalid, Error, Result};
use crate::inner::{cgs_run, vanilla_fw_run, CgsParameters, InnerSolverKind, LoopKind};
use crate::instance::{InstanceMeta, QuadraticInstance};
use crate::oracles::FeasibleSet;
use crate::trace::{Algorithm, Branch, ErrorKind, RunOutcome, RunStatus, RunTrace, TraceRow};

/// Sparsity passed to sparse projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RHat {
    EqualToR,
    Fixed(usize),
}

impl RHat {
    pub fn resolve(&self, r: usize) -> usize {
        match self {
            RHat::EqualToR => r,
            RHat::Fixed(v) => *v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub r_values: Vec<usize>,
    pub delta_values: Vec<f64>,
    pub beta: f64,
    /// Outer iterations `T` for every algorithm.
    pub outer_iters: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub r_hat: RHat,
    /// Parallel runs; `0` lets the thread pool decide.
    #[serde(skip)]
    pub workers: usize,
    /// Recompute AFISTA stopping values with fresh, uncounted LOO calls.
    pub audit: bool,
}

impl Default for ExperimentConfig {
    /// `n = 200`, `r in {10, 20, 40, 80}`, `delta in {0, 0.1, 1}`,
    /// `beta = 100`, `T = 2000`, seeds `0..10`.
    fn default() -> Self {
        Self {
            n: 200,
            r_values: vec![10, 20, 40, 80],
            delta_values: vec![0.0, 0.1, 1.0],
            beta: 100.0,
            outer_iters: 2000,
            seeds: (0..10).collect(),
            algorithms: vec![
                Algorithm::AfistaAfw,
                Algorithm::AfistaSpAfw,
                Algorithm::AfistaSpFw,
                Algorithm::Cgs,
                Algorithm::Fw,
            ],
            r_hat: RHat::EqualToR,
            workers: 0,
            audit: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.r_values.is_empty() || self.delta_values.is_empty() || self.seeds.is_empty() {
            return Err(invalid("r values, delta values and seeds must be nonempty"));
        }
        if let Some(r) = self.r_values.iter().find(|&&r| r == 0 || r > self.n) {
            return Err(invalid(format!("r = {r} must lie in [1, n = {}]", self.n)));
        }
        if self.delta_values.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid("delta values must be finite and nonnegative"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid("beta must be positive and finite"));
        }
        if self.outer_iters < 2 {
            return Err(invalid("outer iterations must be at least 2"));
        }
        if self.algorithms.is_empty() {
            return Err(invalid("at least one algorithm is required"));
        }
        for &r in &self.r_values {
            let r_hat = self.r_hat.resolve(r);
            if r_hat >= self.n {
                return Err(invalid(format!("r_hat = {r_hat} must be below n = {}", self.n)));
            }
        }
        Ok(())
    }

    /// Number of generated instances, `|r| |delta| |seeds|`.
    pub fn num_instances(&self) -> usize {
        self.r_values.len() * self.delta_values.len() * self.seeds.len()
    }
}

/// Inner solver of an AFISTA variant; `None` for the baselines.
pub fn inner_solver_for(algorithm: Algorithm, r_hat: usize) -> Option<InnerSolverKind> {
    Some(match algorithm {
        Algorithm::AfistaAfw => InnerSolverKind::Afw,
        Algorithm::AfistaSpAfw => InnerSolverKind::SparseProjection {
            r_hat,
            loop_kind: LoopKind::Afw,
        },
        Algorithm::AfistaSpFw => InnerSolverKind::SparseProjection {
            r_hat,
            loop_kind: LoopKind::Fw,
        },
        Algorithm::AfistaExact => InnerSolverKind::ExactProjection,
        Algorithm::Cgs | Algorithm::Fw => return None,
    })
}

/// Runs one algorithm on one instance from the simplex barycenter.
pub fn run_algorithm(
    algorithm: Algorithm,
    inst: &QuadraticInstance<f64>,
    outer_iters: usize,
    r_hat: usize,
    audit: bool,
) -> Result<RunOutcome<f64>> {
    let set = FeasibleSet::simplex(inst.meta.n)?;
    let x0 = set.barycenter();
    let obj = &inst.objective;
    let f_star = Some(inst.f_star);
    let mut outcome = match algorithm {
        Algorithm::Fw => vanilla_fw_run(obj, &set, outer_iters, &x0, f_star)?,
        Algorithm::Cgs => cgs_run(obj, &set, outer_iters, &x0, f_star, &CgsParameters::for_problem(obj, &set))?,
        _ => {
            let inner = inner_solver_for(algorithm, r_hat).expect("AFISTA variant");
            let schedule = Schedule::for_set(&set, inst.meta.beta, outer_iters)?;
            let mut config = AfistaConfig::new(schedule, inner);
            config.audit = audit;
            afista_run(obj, &set, &config, &x0, f_star)?
        }
    };
    outcome.trace.instance = Some(inst.meta);
    Ok(outcome)
}

/// Every `(r, delta, seed, algorithm)` run of the grid, sorted in that
/// order. A run that fails is kept as an aborted, row-less trace.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    config.validate()?;
    let mut jobs = Vec::with_capacity(config.num_instances());
    for &r in &config.r_values {
        for &delta in &config.delta_values {
            for &seed in &config.seeds {
                jobs.push((r, delta, seed));
            }
        }
    }
    let run_job = |&(r, delta, seed): &(usize, f64, u64)| -> Result<Vec<RunTrace>> {
        let inst = QuadraticInstance::<f64>::generate(config.n, r, delta, config.beta, seed)?;
        let r_hat = config.r_hat.resolve(r);
        Ok(config
            .algorithms
            .iter()
            .map(|&alg| match run_algorithm(alg, &inst, config.outer_iters, r_hat, config.audit) {
                Ok(out) => out.trace,
                Err(err) => {
                    let mut trace = RunTrace::new(alg, Some(inst.meta), r_hat, ErrorKind::Gap, f64::NAN);
                    trace.status = RunStatus::Aborted {
                        outer_iter: 0,
                        reason: err.to_string(),
                    };
                    trace
                }
            })
            .collect())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let nested: Vec<Result<Vec<RunTrace>>> = pool.install(|| jobs.par_iter().map(run_job).collect());
    let mut traces = Vec::new();
    for group in nested {
        traces.extend(group?);
    }
    sort_traces(&mut traces);
    Ok(traces)
}

fn sort_key(t: &RunTrace) -> (usize, u64, u64, Algorithm) {
    let m = t.instance.unwrap_or(InstanceMeta {
        n: 0,
        r: 0,
        delta: 0.0,
        beta: 0.0,
        seed: 0,
    });
    (m.r, m.delta.to_bits(), m.seed, t.algorithm)
}

pub fn sort_traces(traces: &mut [RunTrace]) {
    traces.sort_by_key(sort_key);
}

pub const CSV_HEADER: &str = "algorithm,seed,n,r,delta,beta,r_hat,status,initial_error,outer_iter,error,fo,loo,sparse_proj,loo_equiv,inner_iters,branch,nu,certificate,audit_stop,audit_omega,step_dist";
pub const TIMING_HEADER: &str = "algorithm,seed,r,delta,outer_iter,wall_ns";

/// Full-precision float: 17 significant digits.
fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn meta_of(t: &RunTrace) -> Result<InstanceMeta> {
    t.instance.ok_or_else(|| invalid("traces written to CSV need instance metadata"))
}

fn status_field(status: &RunStatus) -> String {
    // Reasons may contain commas; only the label goes into the CSV.
    status.label()
}

fn cell_stem(r: usize, delta: f64) -> String {
    format!("cell_r{r}_delta{delta}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The main CSV text and the timing CSV text for `traces`.
pub fn render_csv(traces: &[RunTrace]) -> Result<(String, String)> {
    let mut main = String::from(CSV_HEADER);
    main.push('\n');
    let mut timing = String::from(TIMING_HEADER);
    timing.push('\n');
    for t in traces {
        let m = meta_of(t)?;
        let prefix = format!(
            "{},{},{},{},{},{},{},{},{}",
            t.algorithm.label(),
            m.seed,
            m.n,
            m.r,
            fmt_f64(m.delta),
            fmt_f64(m.beta),
            t.r_hat,
            status_field(&t.status),
            fmt_f64(t.initial_error)
        );
        for row in &t.rows {
            writeln!(
                main,
                "{prefix},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                row.outer_iter,
                fmt_f64(row.error),
                row.fo,
                row.loo,
                row.sparse_proj,
                row.loo_equiv,
                row.inner_iters,
                row.branch.label(),
                fmt_f64(row.nu),
                fmt_f64(row.certificate),
                fmt_f64(row.audit_stop),
                fmt_f64(row.audit_omega),
                fmt_f64(row.step_dist),
            )
            .expect("writing to a String cannot fail");
            writeln!(
                timing,
                "{},{},{},{},{},{}",
                t.algorithm.label(),
                m.seed,
                m.r,
                fmt_f64(m.delta),
                row.outer_iter,
                row.wall_ns
            )
            .expect("writing to a String cannot fail");
        }
    }
    Ok((main, timing))
}

/// Writes all rows of `traces` into one CSV at `path` (header only when
/// empty) and their wall-clock times into the sibling timing file.
pub fn write_csv(traces: &[RunTrace], path: &Path) -> Result<()> {
    let (main, timing) = render_csv(traces)?;
    fs::write(path, main).map_err(io_err(path))?;
    let timing_path = timing_path_for(path);
    fs::write(&timing_path, timing).map_err(io_err(&timing_path))?;
    Ok(())
}

fn timing_path_for(path: &Path) -> PathBuf {
    path.with_extension("timing.csv")
}

/// One CSV per `(r, delta)` cell in `dir`, plus timing sidecars and a
/// manifest. Returns the main CSV paths in cell order.
pub fn emit_csv(traces: &[RunTrace], dir: &Path, config: Option<&ExperimentConfig>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut cells: BTreeMap<(usize, u64), Vec<RunTrace>> = BTreeMap::new();
    for t in traces {
        let m = meta_of(t)?;
        cells.entry((m.r, m.delta.to_bits())).or_default().push(t.clone());
    }
    let mut paths = Vec::new();
    for ((r, delta_bits), mut group) in cells {
        sort_traces(&mut group);
        let path = dir.join(format!("{}.csv", cell_stem(r, f64::from_bits(delta_bits))));
        write_csv(&group, &path)?;
        paths.push(path);
    }
    write_manifest(traces, dir, config, &paths)?;
    Ok(paths)
}

#[derive(Serialize)]
struct Manifest<'a> {
    format: &'static str,
    library: &'static str,
    version: &'static str,
    config: Option<&'a ExperimentConfig>,
    seeds: Vec<u64>,
    runs: usize,
    aborted: Vec<String>,
    files: Vec<String>,
}

fn write_manifest(traces: &[RunTrace], dir: &Path, config: Option<&ExperimentConfig>, paths: &[PathBuf]) -> Result<()> {
    let mut seeds: Vec<u64> = traces.iter().filter_map(|t| t.seed()).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let aborted = traces
        .iter()
        .filter(|t| !t.is_completed())
        .map(|t| {
            let m = t.instance.expect("checked by emit_csv");
            let reason = match &t.status {
                RunStatus::Aborted { reason, .. } => reason.as_str(),
                RunStatus::Completed => "",
            };
            format!("{} r={} delta={} seed={} {}: {reason}", t.algorithm, m.r, m.delta, m.seed, t.status.label())
        })
        .collect();
    let manifest = Manifest {
        format: "afista-experiment/1",
        library: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        seeds,
        runs: traces.len(),
        aborted,
        files: paths
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

/// Parses a CSV written by [`write_csv`]; wall-clock times are merged from
/// the timing sidecar when it exists. Aborted reasons are not stored in
/// CSVs and come back empty.
pub fn read_csv(path: &Path) -> Result<Vec<RunTrace>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |line: usize, reason: String| Error::Format {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut traces: Vec<RunTrace> = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 22 {
            return Err(bad(lineno, format!("expected 22 fields, found {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|e| bad(lineno, format!("field {k}: {e}")));
        let int = |k: usize| f[k].parse::<u64>().map_err(|e| bad(lineno, format!("field {k}: {e}")));
        let algorithm: Algorithm = f[0].parse().map_err(|e: Error| bad(lineno, e.to_string()))?;
        let meta = InstanceMeta {
            seed: int(1)?,
            n: int(2)? as usize,
            r: int(3)? as usize,
            delta: num(4)?,
            beta: num(5)?,
        };
        let r_hat = int(6)? as usize;
        let status = parse_status(f[7]).ok_or_else(|| bad(lineno, format!("bad status {:?}", f[7])))?;
        let initial_error = num(8)?;
        let row = TraceRow {
            outer_iter: int(9)? as usize,
            error: num(10)?,
            fo: int(11)?,
            loo: int(12)?,
            sparse_proj: int(13)?,
            loo_equiv: int(14)?,
            inner_iters: int(15)?,
            branch: f[16].parse::<Branch>().map_err(|e| bad(lineno, e.to_string()))?,
            nu: num(17)?,
            certificate: num(18)?,
            audit_stop: num(19)?,
            audit_omega: num(20)?,
            step_dist: num(21)?,
            wall_ns: 0,
        };
        let same_run = traces.last().is_some_and(|t: &RunTrace| {
            t.algorithm == algorithm
                && t.instance == Some(meta)
                && t.rows.last().is_some_and(|last| last.outer_iter < row.outer_iter)
        });
        if !same_run {
            let error_kind = ErrorKind::Gap;
            let mut t = RunTrace::new(algorithm, Some(meta), r_hat, error_kind, initial_error);
            t.status = status;
            traces.push(t);
        }
        traces.last_mut().expect("just pushed").rows.push(row);
    }
    let timing_path = timing_path_for(path);
    if timing_path.exists() {
        merge_timing(&mut traces, &timing_path)?;
    }
    Ok(traces)
}

fn parse_status(s: &str) -> Option<RunStatus> {
    if s == "completed" {
        return Some(RunStatus::Completed);
    }
    let outer_iter = s.strip_prefix("aborted@")?.parse().ok()?;
    Some(RunStatus::Aborted {
        outer_iter,
        reason: String::new(),
    })
}

fn merge_timing(traces: &mut [RunTrace], path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut walls = text.lines().skip(1).map(|line| line.rsplit(',').next().and_then(|v| v.parse::<u64>().ok()));
    for row in traces.iter_mut().flat_map(|t| t.rows.iter_mut()) {
        match walls.next() {
            Some(Some(ns)) => row.wall_ns = ns,
            _ => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    reason: "timing rows do not match the trace rows".into(),
                })
            }
        }
    }
    Ok(())
}

/// Seed-averaged curves for one cell and algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub algorithm: Algorithm,
    pub runs: usize,
    /// Mean error after outer iteration `t`, `t = 1..=T`.
    pub outer_mean: Vec<f64>,
    /// Shared geometric grid of LOO-equivalent budgets.
    pub loo_grid: Vec<f64>,
    /// Mean over runs of the error reached within each budget.
    pub loo_mean: Vec<f64>,
}

/// Error a run has reached within `budget` LOO-equivalent calls: the error
/// of the last row whose cumulative count is at most `budget`, or the
/// initial error when no row qualifies.
pub fn error_within_budget(trace: &RunTrace, budget: f64) -> f64 {
    let idx = trace.rows.partition_point(|r| (r.loo_equiv as f64) <= budget);
    if idx == 0 {
        trace.initial_error
    } else {
        trace.rows[idx - 1].error
    }
}

/// `points` budgets spaced geometrically from 1 to `max_budget`.
pub fn geometric_grid(max_budget: f64, points: usize) -> Vec<f64> {
    let top = max_budget.max(1.0);
    if points <= 1 {
        return vec![top];
    }
    let ratio = top.ln() / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| (ratio * i as f64).exp()).collect();
    grid[points - 1] = top;
    grid
}

pub const LOO_GRID_POINTS: usize = 200;

/// Averages traces of one algorithm on one cell. All traces must share the
/// number of outer iterations.
pub fn aggregate_runs(traces: &[&RunTrace]) -> Result<Aggregate> {
    let first = traces.first().ok_or_else(|| invalid("nothing to aggregate"))?;
    let len = first.rows.len();
    if traces.iter().any(|t| t.rows.len() != len) {
        return Err(invalid("traces differ in their number of outer iterations"));
    }
    if traces.iter().any(|t| t.algorithm != first.algorithm) {
        return Err(invalid("traces mix algorithms"));
    }
    let k = traces.len() as f64;
    let outer_mean = (0..len)
        .map(|i| traces.iter().map(|t| t.rows[i].error).sum::<f64>() / k)
        .collect();
    let max_budget = traces
        .iter()
        .filter_map(|t| t.rows.last().map(|r| r.loo_equiv as f64))
        .fold(1.0, f64::max);
    let loo_grid = geometric_grid(max_budget, LOO_GRID_POINTS);
    let loo_mean = loo_grid
        .iter()
        .map(|&b| traces.iter().map(|t| error_within_budget(t, b)).sum::<f64>() / k)
        .collect();
    Ok(Aggregate {
        algorithm: first.algorithm,
        runs: traces.len(),
        outer_mean,
        loo_grid,
        loo_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(alg: Algorithm, seed: u64, errors: &[f64], loo: &[u64]) -> RunTrace {
        let meta = InstanceMeta {
            n: 5,
            r: 2,
            delta: 0.1,
            beta: 1.0,
            seed,
        };
        let mut t = RunTrace::new(alg, Some(meta), 2, ErrorKind::Gap, 10.0);
        for (i, (&e, &l)) in errors.iter().zip(loo).enumerate() {
            t.rows.push(TraceRow {
                outer_iter: i + 1,
                error: e,
                fo: i as u64 + 1,
                loo: l,
                sparse_proj: 0,
                loo_equiv: l,
                inner_iters: 0,
                branch: Branch::None,
                nu: f64::NAN,
                certificate: 0.1 * e,
                audit_stop: f64::NAN,
                audit_omega: f64::NAN,
                step_dist: 0.0,
                wall_ns: 17 + i as u64,
            });
        }
        t
    }

    #[test]
    fn empty_and_small_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{CSV_HEADER}\n"));
        let t = synthetic(Algorithm::Fw, 3, &[1.0 / 3.0, 0.1], &[1, 2]);
        write_csv(std::slice::from_ref(&t), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        // NaN fields compare unequal under PartialEq; compare renderings.
        assert_eq!(format!("{:?}", read_csv(&path).unwrap()), format!("{:?}", vec![t]));
    }

    #[test]
    fn aggregate_means_and_budgets() {
        let a = synthetic(Algorithm::Fw, 0, &[4.0, 2.0], &[10, 20]);
        let b = synthetic(Algorithm::Fw, 1, &[2.0, 0.0], &[5, 40]);
        let agg = aggregate_runs(&[&a, &b]).unwrap();
        assert_eq!(agg.outer_mean, vec![3.0, 1.0]);
        assert_eq!(*agg.loo_grid.last().unwrap(), 40.0);
        for (&budget, &mean) in agg.loo_grid.iter().zip(&agg.loo_mean) {
            let ea = if budget < 10.0 { 10.0 } else if budget < 20.0 { 4.0 } else { 2.0 };
            let eb = if budget < 5.0 { 10.0 } else if budget < 40.0 { 2.0 } else { 0.0 };
            assert_eq!(mean, (ea + eb) / 2.0, "budget {budget}");
        }
        let single = aggregate_runs(&[&a]).unwrap();
        assert_eq!(single.outer_mean, vec![4.0, 2.0]);
        let short = synthetic(Algorithm::Fw, 2, &[1.0], &[1]);
        assert!(aggregate_runs(&[&a, &short]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        assert_eq!(ExperimentConfig::default().num_instances(), 120);
        let c = ExperimentConfig {
            r_values: vec![300],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.algorithms.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn one_seed_one_algorithm() {
        let config = ExperimentConfig {
            n: 12,
            r_values: vec![3],
            delta_values: vec![0.5],
            beta: 10.0,
            outer_iters: 5,
            seeds: vec![7],
            algorithms: vec![Algorithm::AfistaAfw],
            ..ExperimentConfig::default()
        };
        let traces = run_experiment(&config).unwrap();
        assert_eq!(traces.len(), 1);
        assert_eq!(traces[0].rows.len(), 5);
        assert_eq!(traces[0].seed(), Some(7));
    }
}
