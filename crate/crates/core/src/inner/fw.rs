use std::time::Instant;

use crate::error::{invalid, Result};
use crate::objective::{golden_section, SmoothObjective};
use crate::oracles::{CountingOracle, FeasibleSet};
use crate::scalar::{AddScaled, feas_tol, lit, to_f64, Point, Real};
use crate::trace::{Algorithm, Branch, ErrorKind, RunOutcome, RunTrace, TraceRow};

/// Frank-Wolfe with exact line search: `iterations` steps of
/// `u = loo(grad f(x))`, `x <- x + gamma (u - x)`, one first-order and one
/// LOO call each. The `certificate` column holds the Frank-Wolfe gap at
/// the point where the step started.
///
/// On polytopes, objectives with cheap vertex updates (quadratics) have
/// their gradient advanced incrementally instead of recomputed.
pub fn vanilla_fw_run<T: Real>(
    obj: &dyn SmoothObjective<T>,
    set: &FeasibleSet<T>,
    iterations: usize,
    x0: &Point<T>,
    f_star: Option<T>,
) -> Result<RunOutcome<T>> {
    set.check_shape(x0)?;
    if obj.shape() != set.shape() {
        return Err(invalid("objective and feasible set disagree on shape"));
    }
    if !set.contains(x0, feas_tol()) {
        return Err(invalid("starting point is not feasible"));
    }
    let oracle = CountingOracle::new(set);
    let error_of = |x: &Point<T>| to_f64(obj.value(x) - f_star.unwrap_or(T::zero()));
    let error_kind = if f_star.is_some() { ErrorKind::Gap } else { ErrorKind::Value };
    let mut trace = RunTrace::new(Algorithm::Fw, None, 0, error_kind, error_of(x0));

    let mut x = x0.clone();
    let mut grad: Option<Point<T>> = None;
    for t in 1..=iterations {
        let started = Instant::now();
        let g = match grad.take() {
            Some(g) => g,
            None => obj.gradient(&x),
        };
        oracle.record_fo();
        let (u, id) = if set.is_polytope() {
            let id = oracle.loo_vertex(&g)?;
            (set.vertex(id), Some(id))
        } else {
            (oracle.loo(&g)?, None)
        };
        let s = &u - &x;
        let slope = s.dot(&g);
        let gamma = match obj.curvature(&s) {
            Some(curv) => crate::objective::clamped_quadratic_step(slope, curv, s.norm_squared(), T::one()),
            None => golden_section(|gm| obj.value(&(&x + &s * gm)), T::zero(), T::one(), lit(1e-12)),
        };
        grad = id.and_then(|id| obj.gradient_toward(&g, gamma, &set.vertex_entries(id)));
        x.add_scaled(gamma, &s);
        let counts = oracle.counts();
        trace.rows.push(TraceRow {
            outer_iter: t,
            error: error_of(&x),
            fo: counts.fo,
            loo: counts.loo,
            sparse_proj: 0,
            loo_equiv: counts.loo,
            inner_iters: 0,
            branch: Branch::None,
            nu: f64::NAN,
            certificate: to_f64(-slope),
            audit_stop: f64::NAN,
            audit_omega: f64::NAN,
            step_dist: to_f64(lit::<T>(0.5) * gamma * gamma * s.norm_squared()),
            wall_ns: started.elapsed().as_nanos() as u64,
        });
    }
    Ok(RunOutcome {
        trace,
        x_final: x,
        counts: oracle.counts(),
    })
}
