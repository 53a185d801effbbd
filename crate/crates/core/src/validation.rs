//! Property checks shared by the `validate` command and the acceptance
//! suite. Every check is seeded and deterministic; sizes are parameters so
//! the same code serves a quick smoke run and a full verification.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::accel::{afista_run, afista_run_observed, AfistaConfig, Schedule, DEFAULT_A};
use crate::error::Result;
use crate::harness::{inner_solver_for, render_csv, run_algorithm, run_experiment, ExperimentConfig};
use crate::inner::{vanilla_fw_run, ActiveSet, InnerResult, InnerSolverKind};
use crate::instance::QuadraticInstance;
use crate::objective::QuadraticObjective;
use crate::oracles::{FeasibleSet, SparsityValue};
use crate::reference;
use crate::trace::{Algorithm, Branch, RunTrace};

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, result: Result<Check>) -> Check {
        result.unwrap_or_else(|e| Check::new(name, false, format!("error: {e}")))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian column with a random scale, shifted to sit near the simplex.
fn random_near_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = [0.05, 0.3, 1.0, 3.0][rng.random_range(0..4)];
    (0..n)
        .map(|_| 1.0 / n as f64 + scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Sort-and-threshold simplex projection against active-set enumeration,
/// `points_per_n` random points for each `n` in `2..=6`.
pub fn simplex_projection_vs_enumeration(points_per_n: usize, seed: u64, tol: f64) -> Check {
    let name = "simplex projection = enumeration";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let mut worst = 0.0f64;
        for n in 2..=6 {
            let set = FeasibleSet::<f64>::simplex(n)?;
            for _ in 0..points_per_n {
                let x = random_near_simplex(n, &mut rng);
                let fast = set.exact_project(&DMatrix::from_column_slice(n, 1, &x))?;
                worst = worst.max(max_abs_diff(fast.as_slice(), &reference::simplex_projection(&x)));
            }
        }
        Ok(Check::new(
            name,
            worst <= tol,
            format!("{} points, max error {worst:.3e} (tol {tol:.0e})", 5 * points_per_n),
        ))
    })())
}

/// `sparse_project` at the largest sparsity agrees with `exact_project` on
/// every domain that supports both.
pub fn sparse_full_equals_exact(points: usize, seed: u64, tol: f64) -> Check {
    let name = "sparse projection at full sparsity = exact projection";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let sets = [
            FeasibleSet::<f64>::simplex(6)?,
            FeasibleSet::l1_ball(6)?,
            FeasibleSet::spectrahedron(4)?,
            FeasibleSet::nuclear_ball(3, 4)?,
        ];
        let mut worst = 0.0f64;
        for set in &sets {
            let (rows, cols) = set.shape();
            let (_, hi) = set.sparsity_range()?;
            for _ in 0..points {
                let mut x = DMatrix::<f64>::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
                if matches!(set.kind(), crate::oracles::SetKind::Spectrahedron { .. }) {
                    x = crate::oracles::spectral::symmetrize(&x);
                }
                let exact = set.exact_project(&x)?;
                let sparse = set.sparse_project(&x, SparsityValue(hi))?;
                worst = worst.max((exact - sparse).amax());
            }
        }
        Ok(Check::new(
            name,
            worst <= tol,
            format!("{} points over 4 domains, max error {worst:.3e} (tol {tol:.0e})", 4 * points),
        ))
    })())
}

/// Simplex sparse projection against brute force over all supports for
/// `n <= 6`, `r <= 3`.
pub fn sparse_simplex_vs_brute_force(points_per_case: usize, seed: u64, tol: f64) -> Check {
    let name = "simplex sparse projection = brute force";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for n in 2..=6usize {
            let set = FeasibleSet::<f64>::simplex(n)?;
            for r in 0..=3usize.min(n - 1) {
                cases += 1;
                for _ in 0..points_per_case {
                    let x = random_near_simplex(n, &mut rng);
                    let fast = set.sparse_project(&DMatrix::from_column_slice(n, 1, &x), SparsityValue(r))?;
                    let slow = reference::sparse_simplex_projection(&x, r);
                    worst = worst.max(max_abs_diff(fast.as_slice(), &slow));
                }
            }
        }
        Ok(Check::new(
            name,
            worst <= tol,
            format!("{cases} (n, r) cases x {points_per_case} points, max error {worst:.3e} (tol {tol:.0e})"),
        ))
    })())
}

/// Spectrahedron projection against Dykstra's alternating projections on
/// random 4x4 symmetric matrices.
pub fn spectrahedron_projection_vs_reference(instances: usize, seed: u64, tol: f64) -> Check {
    let name = "spectrahedron projection = alternating-projection reference";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let set = FeasibleSet::<f64>::spectrahedron(4)?;
        let mut worst = 0.0f64;
        for _ in 0..instances {
            let x = reference::random_symmetric(4, 1.0, &mut rng);
            let fast = set.exact_project(&x)?;
            let slow = reference::spectrahedron_projection(&x, 1e-15, 1_000_000);
            worst = worst.max((fast - slow).amax());
        }
        Ok(Check::new(
            name,
            worst <= tol,
            format!("{instances} matrices, max error {worst:.3e} (tol {tol:.0e})"),
        ))
    })())
}

/// Nuclear-ball projection against an SVD-free enumeration reference, plus
/// the variational residual `max_z <X - P, z - P>` (zero at the projection).
pub fn nuclear_projection_vs_reference(instances: usize, seed: u64, tol: f64) -> Check {
    let name = "nuclear-ball projection = Gram-eigenvalue reference";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let set = FeasibleSet::<f64>::nuclear_ball(3, 4)?;
        let mut worst = 0.0f64;
        let mut worst_residual = f64::NEG_INFINITY;
        for _ in 0..instances {
            let scale = [0.1, 1.0, 3.0][rng.random_range(0..3)];
            let x = DMatrix::<f64>::from_fn(3, 4, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
            let fast = set.exact_project(&x)?;
            let slow = reference::nuclear_projection(&x);
            worst = worst.max((&fast - slow).amax());
            worst_residual = worst_residual.max(reference::projection_residual(&set, &x, &fast));
        }
        Ok(Check::new(
            name,
            worst <= tol && worst_residual <= 1e-12,
            format!("{instances} matrices, max error {worst:.3e} (tol {tol:.0e}), max variational residual {worst_residual:.3e} (tol 1e-12)"),
        ))
    })())
}

/// The LOO answer of each matrix domain is feasible and no worse than
/// `samples` random feasible points, for `instances` random gradients.
pub fn matrix_loo_minimality(instances: usize, samples: usize, seed: u64) -> Check {
    let name = "matrix LOO minimality";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let spectra = FeasibleSet::<f64>::spectrahedron(4)?;
        let nuc = FeasibleSet::<f64>::nuclear_ball(3, 4)?;
        let mut worst = f64::NEG_INFINITY;
        let mut infeasible = 0;
        for _ in 0..instances {
            let g = reference::random_symmetric(4, 1.0, &mut rng);
            let v = spectra.loo(&g)?;
            infeasible += usize::from(!spectra.contains(&v, 1e-9));
            let best = g.dot(&v);
            for _ in 0..samples {
                let z = reference::random_spectrahedron_point(4, &mut rng);
                worst = worst.max(best - g.dot(&z));
            }
            let g = DMatrix::<f64>::from_fn(3, 4, |_, _| rng.sample(StandardNormal));
            let v = nuc.loo(&g)?;
            infeasible += usize::from(!nuc.contains(&v, 1e-9));
            let best = g.dot(&v);
            for _ in 0..samples {
                let z = reference::random_nuclear_point(3, 4, &mut rng);
                worst = worst.max(best - g.dot(&z));
            }
        }
        Ok(Check::new(
            name,
            worst <= 1e-12 && infeasible == 0,
            format!(
                "{instances} gradients x 2 domains x {samples} points, max <g, v - z> = {worst:.3e}, infeasible answers {infeasible}"
            ),
        ))
    })())
}

/// The LOO answer of each polytope is no worse than every enumerated vertex.
pub fn polytope_loo_minimality(instances: usize, seed: u64) -> Check {
    let name = "polytope LOO minimality";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let verts: Vec<DMatrix<f64>> = (0..7)
            .map(|_| DMatrix::from_fn(3, 1, |_, _| rng.sample(StandardNormal)))
            .collect();
        let sets = [
            FeasibleSet::<f64>::simplex(5)?,
            FeasibleSet::l1_ball(5)?,
            FeasibleSet::v_polytope(verts)?,
        ];
        let mut worst = f64::NEG_INFINITY;
        for set in &sets {
            let (rows, _) = set.shape();
            let count = set.num_vertices().expect("polytope");
            for _ in 0..instances {
                let g = DMatrix::<f64>::from_fn(rows, 1, |_, _| rng.sample(StandardNormal));
                let best = g.dot(&set.loo(&g)?);
                for id in 0..count {
                    worst = worst.max(best - g.dot(&set.vertex(id)));
                }
            }
        }
        Ok(Check::new(
            name,
            worst <= 1e-12,
            format!("{instances} gradients x 3 polytopes, max <g, v - vertex> = {worst:.3e}"),
        ))
    })())
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// Every AFISTA row of `traces` has an independently recomputed stopping
/// quantity at most `nu_t + slack`, and no AFISTA run was aborted.
pub fn certificate_soundness(traces: &[RunTrace], slack: f64) -> Check {
    let name = "certificate soundness";
    let mut rows = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut aborted = 0usize;
    for t in traces.iter().filter(|t| t.algorithm.is_afista()) {
        aborted += usize::from(!t.is_completed());
        for row in &t.rows {
            rows += 1;
            let excess = row.audit_stop - row.nu;
            if !(excess <= slack) {
                violations += 1;
            }
            if excess.is_finite() {
                worst = worst.max(excess);
            }
        }
    }
    Check::new(
        name,
        rows > 0 && violations == 0 && aborted == 0,
        format!(
            "{rows} accepted iterates, {violations} above nu + {slack:.0e}, max(audit - nu) = {worst:.3e}, aborted runs {aborted}"
        ),
    )
}

/// `loo_equiv = loo + r_hat * sparse_proj` on every row.
pub fn loo_equivalent_convention(traces: &[RunTrace]) -> Check {
    let bad = traces
        .iter()
        .flat_map(|t| t.rows.iter().map(move |r| (t.r_hat as u64, r)))
        .filter(|(r_hat, row)| row.loo_equiv != row.loo + r_hat * row.sparse_proj)
        .count();
    let rows: usize = traces.iter().map(|t| t.rows.len()).sum();
    Check::new(
        "LOO-equivalent convention",
        rows > 0 && bad == 0,
        format!("{rows} rows, {bad} with loo_equiv != loo + r_hat * sparse_proj"),
    )
}

/// Sizes for a grid of generated simplex instances.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceGrid {
    pub n: usize,
    pub r_values: Vec<usize>,
    pub delta_values: Vec<f64>,
    pub beta: f64,
    pub horizon: usize,
    pub seeds: Vec<u64>,
}

impl InstanceGrid {
    fn instances(&self) -> Result<Vec<QuadraticInstance<f64>>> {
        let mut out = Vec::new();
        for &r in &self.r_values {
            for &delta in &self.delta_values {
                for &seed in &self.seeds {
                    out.push(QuadraticInstance::generate(self.n, r, delta, self.beta, seed)?);
                }
            }
        }
        Ok(out)
    }
}

/// The optimality-gap and step envelopes of the accelerated outer loop,
/// `h_t <= 1.5 beta D0^2 / lambda_t^2` and
/// `1/2 ||x_t - x_{t-1}||^2 <= 4 D0^2 / lambda_t^2` for `2 <= t <= T`, for
/// every AFISTA variant.
pub fn envelope(grid: &InstanceGrid, slack: f64) -> Check {
    let name = "error and step envelopes";
    Check::from_result(name, (|| {
        let set = FeasibleSet::<f64>::simplex(grid.n)?;
        let schedule = Schedule::for_set(&set, grid.beta, grid.horizon)?;
        let mut runs = 0;
        let mut violations = 0;
        let mut worst_h = f64::NEG_INFINITY;
        let mut worst_d = f64::NEG_INFINITY;
        for inst in grid.instances()? {
            for alg in AFISTA_VARIANTS {
                let out = run_algorithm(alg, &inst, grid.horizon, inst.meta.r, false)?;
                runs += 1;
                violations += usize::from(!out.trace.is_completed());
                for row in out.trace.rows.iter().filter(|r| r.outer_iter >= 2) {
                    let eh = row.error - schedule.error_envelope(row.outer_iter);
                    let ed = row.step_dist - schedule.step_envelope(row.outer_iter);
                    worst_h = worst_h.max(eh);
                    worst_d = worst_d.max(ed);
                    if !(eh <= slack && ed <= slack) {
                        violations += 1;
                    }
                }
            }
        }
        Ok(Check::new(
            name,
            violations == 0,
            format!(
                "{runs} runs, {violations} violations, max(h - bound) = {worst_h:.3e}, max(d - bound) = {worst_d:.3e}"
            ),
        ))
    })())
}

pub const AFISTA_VARIANTS: [Algorithm; 4] = [
    Algorithm::AfistaAfw,
    Algorithm::AfistaSpAfw,
    Algorithm::AfistaSpFw,
    Algorithm::AfistaExact,
];

fn afista_config(alg: Algorithm, set: &FeasibleSet<f64>, beta: f64, horizon: usize, r_hat: usize) -> Result<AfistaConfig<f64>> {
    let inner = inner_solver_for(alg, r_hat).expect("AFISTA variant");
    let mut config = AfistaConfig::new(Schedule::for_set(set, beta, horizon)?, inner);
    config.audit = false;
    Ok(config)
}

/// Face identification late in the run, on every instance of `grid` with
/// `r_hat = r`:
///
/// (a) every AFW LOO answer in the final quarter of outer iterations lies
///     in the optimal support;
/// (b) the exact minimizers of `phi_t` in that window have support size at
///     most `r + 1`;
/// (c) the final half of AFISTA-SP/AFW iterations take the sparse-projection
///     branch, with the sparse projection equal to the exact one.
pub fn identification(grid: &InstanceGrid, tol: f64) -> Vec<Check> {
    let names = [
        "late AFW LOO answers inside the optimal support",
        "late exact prox minimizers have support <= r + 1",
        "late SP/AFW iterations hit the sparse projection",
    ];
    let run = || -> Result<Vec<Check>> {
        let set = FeasibleSet::<f64>::simplex(grid.n)?;
        let x0 = set.barycenter();
        let horizon = grid.horizon;
        let quarter = horizon - horizon / 4;
        let half = horizon - horizon / 2;
        let (mut loo_answers, mut loo_outside) = (0usize, 0usize);
        let (mut prox_checked, mut prox_too_large, mut largest_support) = (0usize, 0usize, 0usize);
        let (mut sp_checked, mut sp_missed, mut sp_worst) = (0usize, 0usize, 0.0f64);
        let mut failures = Vec::new();
        for inst in grid.instances()? {
            let r = inst.meta.r;
            let mut observe_afw = |step: &crate::accel::OuterStep<'_, f64>| {
                if step.t <= quarter {
                    return;
                }
                for &v in &step.result.loo_vertices {
                    loo_answers += 1;
                    loo_outside += usize::from(inst.support.binary_search(&v).is_err());
                }
                let exact = step.set.exact_project(&step.sub.prox_center()).expect("simplex projection");
                let support = exact.iter().filter(|&&v| v > 0.0).count();
                prox_checked += 1;
                largest_support = largest_support.max(support);
                prox_too_large += usize::from(support > r + 1);
            };
            let config = afista_config(Algorithm::AfistaAfw, &set, grid.beta, horizon, r)?;
            let out = afista_run_observed(&inst.objective, &set, &config, &x0, Some(inst.f_star), &mut observe_afw)?;
            if !out.trace.is_completed() {
                failures.push(format!("AFW aborted on seed {}", inst.meta.seed));
            }

            let mut observe_sp = |step: &crate::accel::OuterStep<'_, f64>| {
                if step.t <= half {
                    return;
                }
                sp_checked += 1;
                let p = step.sub.prox_center();
                let sparse = step.set.sparse_project(&p, SparsityValue(r)).expect("valid sparsity");
                let exact = step.set.exact_project(&p).expect("simplex projection");
                let gap = (sparse - exact).amax();
                sp_worst = sp_worst.max(gap);
                if step.result.branch != Branch::SparseProjectionHit || !(gap <= tol) {
                    sp_missed += 1;
                }
            };
            let config = afista_config(Algorithm::AfistaSpAfw, &set, grid.beta, horizon, r)?;
            let out = afista_run_observed(&inst.objective, &set, &config, &x0, Some(inst.f_star), &mut observe_sp)?;
            if !out.trace.is_completed() {
                failures.push(format!("SP/AFW aborted on seed {}", inst.meta.seed));
            }
        }
        let aborted = if failures.is_empty() {
            String::new()
        } else {
            format!("; {}", failures.join(", "))
        };
        Ok(vec![
            Check::new(
                names[0],
                loo_answers > 0 && loo_outside == 0 && failures.is_empty(),
                format!("{loo_answers} LOO answers, {loo_outside} outside the support{aborted}"),
            ),
            Check::new(
                names[1],
                prox_checked > 0 && prox_too_large == 0 && failures.is_empty(),
                format!("{prox_checked} prox minimizers, largest support {largest_support}, {prox_too_large} too large{aborted}"),
            ),
            Check::new(
                names[2],
                sp_checked > 0 && sp_missed == 0 && failures.is_empty(),
                format!(
                    "{sp_checked} iterations, {sp_missed} missed, max |sparse - exact| = {sp_worst:.3e} (tol {tol:.0e}){aborted}"
                ),
            ),
        ])
    };
    run().unwrap_or_else(|e| names.iter().map(|n| Check::new(*n, false, format!("error: {e}"))).collect())
}

/// Each drop step removes a vertex that an earlier step added or that the
/// loop started with, so `2 drops <= iterations + initial active size`:
/// `(iterations + 1) / 2` for the single-vertex start of AFISTA-AFW.
fn drop_bound_holds(res: &InnerResult<f64>) -> bool {
    2 * res.drop_steps <= res.inner_iterations + res.initial_active
}

/// Drop-step bound on every away-step solve of AFISTA-AFW (single-vertex
/// start) and of the AFW fallback of AFISTA-SP/AFW (warm start).
pub fn drop_step_bound(grid: &InstanceGrid) -> Check {
    let name = "drop steps <= (iterations + initial active size) / 2";
    Check::from_result(name, (|| {
        let set = FeasibleSet::<f64>::simplex(grid.n)?;
        let x0 = set.barycenter();
        let (mut solves, mut bad, mut total_drops, mut singleton_starts) = (0usize, 0usize, 0usize, 0usize);
        for inst in grid.instances()? {
            for alg in [Algorithm::AfistaAfw, Algorithm::AfistaSpAfw] {
                let config = afista_config(alg, &set, grid.beta, grid.horizon, inst.meta.r)?;
                let mut observe = |step: &crate::accel::OuterStep<'_, f64>| {
                    let res = step.result;
                    if res.branch == Branch::AfwLoop {
                        solves += 1;
                        singleton_starts += usize::from(res.initial_active == 1);
                        total_drops += res.drop_steps;
                        bad += usize::from(!drop_bound_holds(res));
                    }
                };
                afista_run_observed(&inst.objective, &set, &config, &x0, Some(inst.f_star), &mut observe)?;
            }
        }
        Ok(Check::new(
            name,
            solves > 0 && bad == 0,
            format!(
                "{solves} AFW solves ({singleton_starts} single-vertex starts), {total_drops} drop steps, {bad} over the bound"
            ),
        ))
    })())
}

/// The drop-step bound on random simplex subproblems, alternating
/// single-vertex starts with starts from the full vertex set (where drops
/// are frequent).
pub fn drop_step_bound_random(count: usize, n: usize, seed: u64) -> Check {
    let name = "drop-step bound on random subproblems";
    Check::from_result(name, (|| {
        let mut rng = rng(seed);
        let set = FeasibleSet::<f64>::simplex(n)?;
        let (mut bad, mut total_drops, mut total_iters) = (0usize, 0usize, 0usize);
        for i in 0..count {
            let sparse_point = |rng: &mut ChaCha8Rng| {
                let k = rng.random_range(1..=n.min(4));
                let mut v = DMatrix::<f64>::zeros(n, 1);
                for _ in 0..k {
                    v[rng.random_range(0..n)] += rng.random::<f64>() + 0.05;
                }
                let total = v.sum();
                v / total
            };
            let y = sparse_point(&mut rng);
            let x_prev = sparse_point(&mut rng);
            let grad = DMatrix::<f64>::from_fn(n, 1, |_, _| rng.sample(StandardNormal));
            let lambda = 1.0 + 9.0 * rng.random::<f64>();
            let beta = 0.5 + 20.0 * rng.random::<f64>();
            let sub = crate::accel::InnerSubproblem::new(grad, y, x_prev, lambda, beta)?;
            let oracle = crate::oracles::CountingOracle::new(&set);
            let res = if i % 2 == 0 {
                crate::inner::afw_solve(&sub, &oracle, 1e-10, &Default::default())?
            } else {
                let start = ActiveSet::from_weights((0..n).map(|j| (j, 1.0 / n as f64)).collect());
                let mut res = InnerResult::new(set.barycenter(), Branch::AfwLoop);
                crate::inner::afw_loop(&sub, &oracle, 1e-10, start, &Default::default(), &mut res)?;
                res
            };
            total_drops += res.drop_steps;
            total_iters += res.inner_iterations;
            bad += usize::from(!drop_bound_holds(&res));
        }
        Ok(Check::new(
            name,
            total_drops > 0 && bad == 0,
            format!("{count} solves, {total_iters} iterations, {total_drops} drop steps, {bad} over the bound"),
        ))
    })())
}

/// Two runs of the same grid render byte-identical CSVs.
pub fn determinism(config: &ExperimentConfig) -> Check {
    let name = "double run gives byte-identical CSV";
    Check::from_result(name, (|| {
        let (first, _) = render_csv(&run_experiment(config)?)?;
        let (second, _) = render_csv(&run_experiment(config)?)?;
        Ok(Check::new(
            name,
            first == second,
            format!("{} bytes, identical: {}", first.len(), first == second),
        ))
    })())
}

fn first_reach(trace: &RunTrace, eps: f64) -> Option<(usize, u64)> {
    trace.rows.iter().find(|r| r.error <= eps).map(|r| (r.outer_iter, r.loo_equiv))
}

/// Qualitative checks on a grid sweep:
///
/// (a) each AFISTA variant in `traces` reaches `1e-6` in strictly fewer
///     outer iterations than vanilla FW, on every instance;
/// (b) for `delta = 1` and `r in {10, 20}`, AFISTA-SP/AFW reaches `1e-4`
///     with fewer LOO-equivalent calls than FW;
/// (c) every AFISTA run makes exactly `horizon` first-order calls.
pub fn sweep_shape(traces: &[RunTrace], horizon: usize) -> Vec<Check> {
    use std::collections::BTreeMap;
    let mut by_instance: BTreeMap<(usize, u64, u64), Vec<&RunTrace>> = BTreeMap::new();
    for t in traces {
        if let Some(m) = t.instance {
            by_instance.entry((m.r, m.delta.to_bits(), m.seed)).or_default().push(t);
        }
    }
    let (mut compared, mut slower, mut slowest, mut unreached) = (0usize, Vec::new(), 0usize, 0usize);
    let (mut loo_compared, mut loo_slower) = (0usize, Vec::new());
    for ((r, delta_bits, seed), group) in &by_instance {
        let delta = f64::from_bits(*delta_bits);
        let Some(fw) = group.iter().find(|t| t.algorithm == Algorithm::Fw) else {
            continue;
        };
        let fw_iter = first_reach(fw, 1e-6).map(|p| p.0);
        for t in group.iter().filter(|t| t.algorithm.is_afista()) {
            compared += 1;
            let k = first_reach(t, 1e-6).map(|p| p.0);
            let faster = matches!((k, fw_iter), (Some(a), Some(b)) if a < b) || (k.is_some() && fw_iter.is_none());
            if !faster {
                slower.push(format!("{} r={r} delta={delta} seed={seed}", t.algorithm));
            }
            match k {
                Some(k) => slowest = slowest.max(k),
                None => unreached += 1,
            }
        }
        if delta == 1.0 && (*r == 10 || *r == 20) {
            if let Some(sp) = group.iter().find(|t| t.algorithm == Algorithm::AfistaSpAfw) {
                loo_compared += 1;
                let a = first_reach(sp, 1e-4).map(|p| p.1);
                let b = first_reach(fw, 1e-4).map(|p| p.1);
                let fewer = matches!((a, b), (Some(a), Some(b)) if a < b) || (a.is_some() && b.is_none());
                if !fewer {
                    loo_slower.push(format!("r={r} seed={seed} ({a:?} vs {b:?})"));
                }
            }
        }
    }
    let afista: Vec<&RunTrace> = traces.iter().filter(|t| t.algorithm.is_afista()).collect();
    let fo_bad = afista
        .iter()
        .filter(|t| !(t.is_completed() && t.rows.len() == horizon && t.rows.last().is_some_and(|r| r.fo == horizon as u64)))
        .count();
    let list = |v: &[String]| if v.is_empty() { String::new() } else { format!(": {}", v.join("; ")) };
    vec![
        Check::new(
            "AFISTA reaches 1e-6 in fewer outer iterations than FW",
            compared > 0 && slower.is_empty(),
            format!(
                "{compared} comparisons, slowest AFISTA reach {slowest}, {unreached} never reached, {} not faster{}",
                slower.len(),
                list(&slower)
            ),
        ),
        Check::new(
            "SP/AFW reaches 1e-4 with fewer LOO-equivalents than FW",
            loo_compared > 0 && loo_slower.is_empty(),
            format!("{loo_compared} comparisons, {} not fewer{}", loo_slower.len(), list(&loo_slower)),
        ),
        Check::new(
            "AFISTA first-order calls equal the horizon",
            !afista.is_empty() && fo_bad == 0,
            format!("{} runs, {fo_bad} with FO calls != {horizon}", afista.len()),
        ),
    ]
}

/// Iterations to reach each of `eps` (in order).
fn reach_counts(trace: &RunTrace, eps: &[f64]) -> Vec<Option<usize>> {
    eps.iter().map(|&e| trace.first_iter_below(e)).collect()
}

/// `N(eps_{i+1}) / N(eps_i)` must lie within a factor 2 of `expected`.
fn ratio_band(counts: &[Option<usize>], expected: f64) -> (bool, Vec<f64>) {
    if counts.iter().any(|c| c.is_none()) {
        return (false, Vec::new());
    }
    let ratios: Vec<f64> = counts
        .windows(2)
        .map(|w| w[1].unwrap() as f64 / w[0].unwrap() as f64)
        .collect();
    let ok = ratios.iter().all(|&q| q >= expected / 2.0 && q <= expected * 2.0);
    (ok, ratios)
}

pub const SCALING_TARGETS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Ill-conditioned separable quadratic on the l1 ball whose minimizer is
/// interior: eigenvalues `beta * 10^(-8 i / (n - 1))`, optimum `0.5 / n` in
/// every coordinate. Returns the objective and its optimal value.
pub fn log_spectrum_quadratic(n: usize, beta: f64) -> Result<(QuadraticObjective<f64>, f64)> {
    let eig: Vec<f64> = (0..n)
        .map(|i| beta * 10f64.powf(-8.0 * i as f64 / (n as f64 - 1.0)))
        .collect();
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig));
    let x_star = DMatrix::from_element(n, 1, 0.5 / n as f64);
    let b = -(&a * &x_star);
    let f_star = -0.5 * x_star.dot(&(&a * &x_star));
    Ok((QuadraticObjective::with_smoothness(a, b, beta)?, f_star))
}

/// AFISTA with exact inner solves on [`log_spectrum_quadratic`] (`n = 200`,
/// `beta = 3e4`, horizon `2e4`, from the origin): the outer-iteration
/// counts to reach `1e-2, 1e-3, 1e-4` grow by ratios within a factor 2 of
/// `sqrt(10)`.
pub fn afista_scaling() -> Check {
    let name = "AFISTA iterations scale like eps^-1/2";
    Check::from_result(name, (|| {
        let (n, beta, horizon) = (200, 3e4, 20_000);
        let (obj, f_star) = log_spectrum_quadratic(n, beta)?;
        let set = FeasibleSet::<f64>::l1_ball(n)?;
        let x0 = DMatrix::zeros(n, 1);
        let schedule = Schedule::new(DEFAULT_A, horizon, beta, set.diameter())?;
        let mut config = AfistaConfig::new(schedule, InnerSolverKind::ExactProjection);
        config.audit = false;
        let out = afista_run(&obj, &set, &config, &x0, Some(f_star))?;
        let counts = reach_counts(&out.trace, &SCALING_TARGETS);
        let (ok, ratios) = ratio_band(&counts, 10f64.sqrt());
        Ok(Check::new(
            name,
            ok,
            format!("iterations {counts:?}, ratios {ratios:.3?}, band [{:.3}, {:.3}]", 10f64.sqrt() / 2.0, 10f64.sqrt() * 2.0),
        ))
    })())
}

/// Vanilla FW on generated simplex instances (`n = 50`, `r = 5`,
/// `delta = 0.1`, `beta = 10`): iteration counts to reach `1e-2, 1e-3,
/// 1e-4` grow by ratios within a factor 2 of `10`.
pub fn fw_scaling(seeds: &[u64]) -> Check {
    let name = "FW iterations scale like eps^-1";
    Check::from_result(name, (|| {
        let mut ok = !seeds.is_empty();
        let mut parts = Vec::new();
        for &seed in seeds {
            let inst = QuadraticInstance::<f64>::generate(50, 5, 0.1, 10.0, seed)?;
            let set = FeasibleSet::<f64>::simplex(50)?;
            let out = vanilla_fw_run(&inst.objective, &set, 100_000, &set.barycenter(), Some(inst.f_star))?;
            let counts = reach_counts(&out.trace, &SCALING_TARGETS);
            let (pass, ratios) = ratio_band(&counts, 10.0);
            ok &= pass;
            parts.push(format!("seed {seed}: {counts:?} ratios {ratios:.2?}"));
        }
        Ok(Check::new(name, ok, format!("{}, band [5, 20]", parts.join("; "))))
    })())
}

/// Reduced, deterministic versions of every check, for the CLI.
pub fn quick_suite() -> Vec<Check> {
    let mut checks = vec![
        simplex_projection_vs_enumeration(100, 1, 1e-10),
        sparse_full_equals_exact(50, 2, 1e-9),
        sparse_simplex_vs_brute_force(20, 3, 1e-9),
        spectrahedron_projection_vs_reference(20, 4, 1e-7),
        nuclear_projection_vs_reference(20, 5, 1e-7),
        matrix_loo_minimality(10, 200, 6),
        polytope_loo_minimality(20, 7),
    ];
    let small = InstanceGrid {
        n: 30,
        r_values: vec![3],
        delta_values: vec![0.0, 1.0],
        beta: 10.0,
        horizon: 150,
        seeds: vec![0, 1],
    };
    checks.push(envelope(&small, 1e-9));
    checks.push(drop_step_bound(&small));
    checks.push(drop_step_bound_random(200, 8, 8));
    let sweep = ExperimentConfig {
        n: 30,
        r_values: vec![3],
        delta_values: vec![1.0],
        beta: 10.0,
        outer_iters: 150,
        seeds: vec![0, 1],
        workers: 1,
        ..ExperimentConfig::default()
    };
    match run_experiment(&sweep) {
        Ok(traces) => {
            checks.push(certificate_soundness(&traces, 1e-9));
            checks.push(loo_equivalent_convention(&traces));
        }
        Err(e) => checks.push(Check::new("small sweep", false, format!("error: {e}"))),
    }
    checks.push(determinism(&sweep));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::SmoothObjective;

    #[test]
    fn ratio_band_edges() {
        assert!(ratio_band(&[Some(10), Some(100), Some(1000)], 10.0).0);
        assert!(!ratio_band(&[Some(10), Some(30), Some(1000)], 10.0).0);
        assert!(!ratio_band(&[Some(10), None, Some(1000)], 10.0).0);
    }

    #[test]
    fn check_line_format() {
        let c = Check::new("x", false, "y");
        assert_eq!(c.to_string(), "[FAIL] x: y");
    }

    #[test]
    fn log_spectrum_optimum_is_stationary() {
        let (obj, f_star) = log_spectrum_quadratic(10, 5.0).unwrap();
        let x = DMatrix::from_element(10, 1, 0.05);
        assert!(obj.gradient(&x).amax() < 1e-14);
        assert!((obj.value(&x) - f_star).abs() < 1e-15);
    }
}
