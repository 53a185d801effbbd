use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::objective::SmoothObjective;
use crate::oracles::{CountingOracle, FeasibleSet};
use crate::scalar::{AddScaled, feas_tol, lit, to_f64, Point, Real};
use crate::trace::{Algorithm, Branch, ErrorKind, RunOutcome, RunStatus, RunTrace, TraceRow};

/// Conditional gradient sliding (Lan and Zhou) for smooth convex `f`.
///
/// Outer step `k` with `gamma_k = 3/(k+2)`, `beta_k = 3L/(k+1)` and
/// `eta_k = L D^2 / (k (k+1))`:
///
/// ```text
/// z_k = (1 - gamma_k) y_{k-1} + gamma_k x_{k-1}
/// x_k = CndG(grad f(z_k), x_{k-1}, beta_k, eta_k)
/// y_k = (1 - gamma_k) y_{k-1} + gamma_k x_k
/// ```
///
/// where `CndG(g, u, beta, eta)` runs Frank-Wolfe with exact line search on
/// `<g, x> + beta/2 ||x - u||^2` until its Wolfe gap is at most `eta`.
/// Errors are reported at `y_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgsParameters<T: Real> {
    /// Smoothness constant `L`.
    pub smoothness: T,
    /// Diameter `D` of the feasible set.
    pub diameter: T,
    /// Inner cap at outer step `k`; `None` uses `10^4 + 100 k`.
    pub inner_cap: Option<usize>,
}

impl<T: Real> CgsParameters<T> {
    pub fn for_problem(obj: &dyn SmoothObjective<T>, set: &FeasibleSet<T>) -> Self {
        Self {
            smoothness: obj.smoothness(),
            diameter: set.diameter(),
            inner_cap: None,
        }
    }

    pub fn gamma(&self, k: usize) -> T {
        lit::<T>(3.0) / lit(k as f64 + 2.0)
    }

    pub fn beta(&self, k: usize) -> T {
        lit::<T>(3.0) * self.smoothness / lit(k as f64 + 1.0)
    }

    pub fn eta(&self, k: usize) -> T {
        self.smoothness * self.diameter * self.diameter / lit((k * (k + 1)) as f64)
    }

    fn cap(&self, k: usize) -> usize {
        self.inner_cap.unwrap_or(10_000 + 100 * k)
    }
}

pub fn cgs_run<T: Real>(
    obj: &dyn SmoothObjective<T>,
    set: &FeasibleSet<T>,
    outer: usize,
    x0: &Point<T>,
    f_star: Option<T>,
    params: &CgsParameters<T>,
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
    let mut trace = RunTrace::new(Algorithm::Cgs, None, 0, error_kind, error_of(x0));

    let mut x = x0.clone();
    let mut y = x0.clone();
    for k in 1..=outer {
        let started = Instant::now();
        let gamma = params.gamma(k);
        let z = &y * (T::one() - gamma) + &x * gamma;
        let g = obj.gradient(&z);
        oracle.record_fo();
        let eta = params.eta(k);
        let (x_next, iters, gap) = match cndg(&oracle, &g, &x, params.beta(k), eta, params.cap(k)) {
            Ok(v) => v,
            Err(err @ Error::IterationCap { .. }) => {
                trace.status = RunStatus::Aborted {
                    outer_iter: k,
                    reason: err.to_string(),
                };
                break;
            }
            Err(err) => return Err(err),
        };
        let y_next = &y * (T::one() - gamma) + &x_next * gamma;
        let counts = oracle.counts();
        trace.rows.push(TraceRow {
            outer_iter: k,
            error: error_of(&y_next),
            fo: counts.fo,
            loo: counts.loo,
            sparse_proj: 0,
            loo_equiv: counts.loo,
            inner_iters: iters as u64,
            branch: Branch::None,
            nu: to_f64(eta),
            certificate: to_f64(gap),
            audit_stop: f64::NAN,
            audit_omega: f64::NAN,
            step_dist: to_f64(lit::<T>(0.5) * (&y_next - &y).norm_squared()),
            wall_ns: started.elapsed().as_nanos() as u64,
        });
        x = x_next;
        y = y_next;
    }
    Ok(RunOutcome {
        trace,
        x_final: y,
        counts: oracle.counts(),
    })
}

/// Frank-Wolfe on `<g, v> + beta/2 ||v - u||^2` from `u` until the Wolfe
/// gap is at most `eta`. Returns the point, the iteration count and the
/// final gap.
fn cndg<T: Real>(
    oracle: &CountingOracle<'_, T>,
    g: &Point<T>,
    u: &Point<T>,
    beta: T,
    eta: T,
    cap: usize,
) -> Result<(Point<T>, usize, T)> {
    let mut ut = u.clone();
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let mut grad = &ut - u;
        grad *= beta;
        grad += g;
        let v = oracle.loo(&grad)?;
        let s = &v - &ut;
        let gap = -grad.dot(&s);
        if gap <= eta {
            return Ok((ut, iterations, gap));
        }
        if iterations >= cap {
            return Err(Error::IterationCap {
                solver: "conditional gradient sliding inner loop",
                cap,
                last_gap: to_f64(gap),
                tolerance: to_f64(eta),
            });
        }
        let s_sq = s.norm_squared();
        let alpha = crate::objective::clamped_quadratic_step(-gap, beta * s_sq, s_sq, T::one());
        ut.add_scaled(alpha, &s);
    }
}
