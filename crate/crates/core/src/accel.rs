//! Approximated FISTA: the accelerated outer loop whose prox steps are
//! solved only approximately, by a projection-free inner solver.
//!
//! With `lambda_t = (t + a - 1) / a`, iteration `t` takes the gradient `g`
//! at `y_{t-1}` and asks the inner solver for a point `x_t` whose
//! acceptance value
//!
//! ```text
//! omega_t(x) = max_{w in K} < x - ((1 - 1/lambda_t) x_{t-1} + w / lambda_t), grad phi_t(x) >
//! ```
//!
//! is at most `nu_t = beta D0^2 / (lambda_t^2 t (1 + ln T))`, where
//! `phi_t(x) = <x - y_{t-1}, g> + beta/2 ||x - y_{t-1}||^2`. The momentum
//! step is `y_t = x_t + ((lambda_t - 1) / lambda_{t+1}) (x_t - x_{t-1})`.

use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::inner::{self, InnerOptions, InnerResult, InnerSolverKind, LoopKind};
use crate::objective::SmoothObjective;
use crate::oracles::{CountingOracle, FeasibleSet};
use crate::scalar::{AddScaled, feas_tol, lit, to_f64, Point, Real};
use crate::trace::{Algorithm, Branch, ErrorKind, RunOutcome, RunStatus, RunTrace, TraceRow};

/// Momentum parameter used unless overridden.
pub const DEFAULT_A: f64 = 5.0;

/// `lambda_t = (t + a - 1) / a`.
pub fn lambda_of<T: Real>(t: usize, a: T) -> T {
    (lit::<T>(t as f64) + a - T::one()) / a
}

/// The `lambda_t` / `nu_t` schedule for a fixed horizon `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule<T: Real> {
    pub a: T,
    pub horizon: usize,
    pub beta: T,
    pub d0: T,
}

impl<T: Real> Schedule<T> {
    pub fn new(a: T, horizon: usize, beta: T, d0: T) -> Result<Self> {
        if !(a >= lit(2.0)) || !a.is_finite() {
            return Err(invalid(format!("momentum parameter a = {a} must be at least 2")));
        }
        if horizon < 2 {
            return Err(invalid(format!("horizon T = {horizon} must be at least 2")));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(invalid("smoothness must be positive and finite"));
        }
        if !(d0 > T::zero()) || !d0.is_finite() {
            return Err(invalid("initial distance bound must be positive and finite"));
        }
        Ok(Self { a, horizon, beta, d0 })
    }

    /// `a = 5` and `D0` equal to the diameter of `set`.
    pub fn for_set(set: &FeasibleSet<T>, beta: T, horizon: usize) -> Result<Self> {
        Self::new(lit(DEFAULT_A), horizon, beta, set.diameter())
    }

    /// Smallest horizon with `1.5 beta D0^2 / lambda_T^2 <= eps`.
    pub fn for_target(a: T, beta: T, d0: T, eps: T) -> Result<Self> {
        if !(eps > T::zero()) {
            return Err(invalid("target accuracy must be positive"));
        }
        // lambda_T >= sqrt(1.5 beta D0^2 / eps)  <=>  T >= a lambda - a + 1.
        let lambda = (lit::<T>(1.5) * beta * d0 * d0 / eps).sqrt();
        let mut horizon = to_f64(a * lambda - a + T::one()).ceil().max(2.0) as usize;
        while horizon > 2 && Self::envelope_at(a, beta, d0, horizon - 1) <= eps {
            horizon -= 1;
        }
        while Self::envelope_at(a, beta, d0, horizon) > eps {
            horizon += 1;
        }
        Self::new(a, horizon, beta, d0)
    }

    fn envelope_at(a: T, beta: T, d0: T, t: usize) -> T {
        let l = lambda_of(t, a);
        lit::<T>(1.5) * beta * d0 * d0 / (l * l)
    }

    pub fn lambda(&self, t: usize) -> T {
        lambda_of(t, self.a)
    }

    pub fn nu(&self, t: usize) -> Result<T> {
        nu_of(t, self)
    }

    /// Error bound `1.5 beta D0^2 / lambda_t^2`.
    pub fn error_envelope(&self, t: usize) -> T {
        Self::envelope_at(self.a, self.beta, self.d0, t)
    }

    /// Step bound `4 D0^2 / lambda_t^2` on `1/2 ||x_t - x_{t-1}||^2`.
    pub fn step_envelope(&self, t: usize) -> T {
        let l = self.lambda(t);
        lit::<T>(4.0) * self.d0 * self.d0 / (l * l)
    }
}

/// `nu_t = beta D0^2 / (lambda_t^2 t (1 + ln T))` for `1 <= t <= T`.
pub fn nu_of<T: Real>(t: usize, schedule: &Schedule<T>) -> Result<T> {
    if t > schedule.horizon {
        return Err(Error::ScheduleOverflow {
            t,
            horizon: schedule.horizon,
        });
    }
    if t == 0 {
        return Err(invalid("outer iterations are numbered from 1"));
    }
    let l = schedule.lambda(t);
    let log_t = lit::<T>((schedule.horizon as f64).ln());
    Ok(schedule.beta * schedule.d0 * schedule.d0 / (l * l * lit(t as f64) * (T::one() + log_t)))
}

/// `y_t = x_t + ((lambda_t - 1) / lambda_{t+1}) (x_t - x_{t-1})`.
pub fn y_update<T: Real>(x_curr: &Point<T>, x_prev: &Point<T>, t: usize, a: T) -> Point<T> {
    let coef = (lambda_of(t, a) - T::one()) / lambda_of(t + 1, a);
    let mut y = x_curr - x_prev;
    y *= coef;
    y += x_curr;
    y
}

/// The iteration-`t` pair `(phi_t, Phi_t)`.
///
/// `Phi_t(w) = phi_t(mix(w)) + const` with
/// `mix(w) = (1 - 1/lambda) x_{t-1} + w / lambda`, so minimizing `Phi_t` over
/// `K` and mixing yields an approximate minimizer of `phi_t` over the
/// shrunken set `(1 - 1/lambda) x_{t-1} + K / lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSubproblem<T: Real> {
    /// `grad f(y_{t-1})`.
    pub grad: Point<T>,
    pub y_prev: Point<T>,
    pub x_prev: Point<T>,
    pub lambda: T,
    pub beta: T,
    /// `(lambda - 1) x_{t-1} - lambda y_{t-1}`.
    shift: Point<T>,
}

impl<T: Real> InnerSubproblem<T> {
    pub fn new(grad: Point<T>, y_prev: Point<T>, x_prev: Point<T>, lambda: T, beta: T) -> Result<Self> {
        if grad.shape() != y_prev.shape() || grad.shape() != x_prev.shape() {
            return Err(invalid("gradient, y and x must share a shape"));
        }
        if !(lambda >= T::one()) || !(beta > T::zero()) {
            return Err(invalid("lambda must be at least 1 and beta positive"));
        }
        let shift = &x_prev * (lambda - T::one()) - &y_prev * lambda;
        Ok(Self {
            grad,
            y_prev,
            x_prev,
            lambda,
            beta,
            shift,
        })
    }

    pub fn phi(&self, x: &Point<T>) -> T {
        let d = x - &self.y_prev;
        d.dot(&self.grad) + lit::<T>(0.5) * self.beta * d.norm_squared()
    }

    pub fn grad_phi(&self, x: &Point<T>) -> Point<T> {
        let mut out = x - &self.y_prev;
        out *= self.beta;
        out += &self.grad;
        out
    }

    pub fn big_phi(&self, w: &Point<T>) -> T {
        let inv = T::one() / self.lambda;
        let lin = (w - &self.y_prev).dot(&self.grad) * inv;
        lin + lit::<T>(0.5) * self.beta * inv * inv * (w + &self.shift).norm_squared()
    }

    pub fn grad_big_phi(&self, w: &Point<T>) -> Point<T> {
        let inv = T::one() / self.lambda;
        let mut out = w + &self.shift;
        out *= self.beta * inv * inv;
        out.add_scaled(inv, &self.grad);
        out
    }

    /// Strong convexity and smoothness constant of `Phi_t`: `beta / lambda^2`.
    pub fn curvature(&self) -> T {
        self.beta / (self.lambda * self.lambda)
    }

    /// `(1 - 1/lambda) x_{t-1} + w / lambda`.
    pub fn mix(&self, w: &Point<T>) -> Point<T> {
        let inv = T::one() / self.lambda;
        let mut out = &self.x_prev * (T::one() - inv);
        out.add_scaled(inv, w);
        out
    }

    /// `y_{t-1} - grad / beta`, the unconstrained minimizer of `phi_t`.
    pub fn prox_center(&self) -> Point<T> {
        let mut out = self.y_prev.clone();
        out.add_scaled(-T::one() / self.beta, &self.grad);
        out
    }
}

fn omega_with<T: Real>(
    sub: &InnerSubproblem<T>,
    x: &Point<T>,
    loo: impl FnOnce(&Point<T>) -> Result<Point<T>>,
) -> Result<T> {
    let gp = sub.grad_phi(x);
    let u = loo(&gp)?;
    Ok((x - sub.mix(&u)).dot(&gp))
}

/// `omega_t(x)`, with one counted LOO call.
pub fn omega_gap<T: Real>(sub: &InnerSubproblem<T>, x: &Point<T>, oracle: &CountingOracle<'_, T>) -> Result<T> {
    omega_with(sub, x, |g| oracle.loo(g))
}

/// `omega_t(x)` with an uncounted LOO call, for audits.
pub fn omega_gap_uncounted<T: Real>(sub: &InnerSubproblem<T>, x: &Point<T>, set: &FeasibleSet<T>) -> Result<T> {
    omega_with(sub, x, |g| set.loo(g))
}

/// Wolfe gap `max_u <w - u, grad Phi_t(w)>`, with one counted LOO call.
pub fn inner_dual_gap<T: Real>(sub: &InnerSubproblem<T>, w: &Point<T>, oracle: &CountingOracle<'_, T>) -> Result<T> {
    let g = sub.grad_big_phi(w);
    let u = oracle.loo(&g)?;
    Ok((w - u).dot(&g))
}

/// The stopping value an inner result claims, recomputed from scratch with
/// an uncounted LOO: the sparse-projection test for sparse-projection hits,
/// `omega_t` otherwise.
pub fn audit_stop<T: Real>(sub: &InnerSubproblem<T>, res: &InnerResult<T>, set: &FeasibleSet<T>) -> Result<T> {
    match res.branch {
        Branch::SparseProjectionHit => {
            let p = sub.prox_center();
            let d = &res.x - p;
            let u = set.loo(&d)?;
            Ok((&res.x - u).dot(&d))
        }
        _ => omega_gap_uncounted(sub, &res.x, set),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfistaConfig<T: Real> {
    pub schedule: Schedule<T>,
    pub inner: InnerSolverKind,
    /// Recompute every stopping value with a fresh, uncounted LOO.
    pub audit: bool,
    pub inner_options: InnerOptions,
}

impl<T: Real> AfistaConfig<T> {
    pub fn new(schedule: Schedule<T>, inner: InnerSolverKind) -> Self {
        Self {
            schedule,
            inner,
            audit: true,
            inner_options: InnerOptions::default(),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self.inner {
            InnerSolverKind::Afw => Algorithm::AfistaAfw,
            InnerSolverKind::SparseProjection {
                loop_kind: LoopKind::Afw,
                ..
            } => Algorithm::AfistaSpAfw,
            InnerSolverKind::SparseProjection {
                loop_kind: LoopKind::Fw,
                ..
            } => Algorithm::AfistaSpFw,
            InnerSolverKind::ExactProjection => Algorithm::AfistaExact,
        }
    }

    fn r_hat(&self) -> usize {
        match self.inner {
            InnerSolverKind::SparseProjection { r_hat, .. } => r_hat,
            _ => 0,
        }
    }
}

/// What an observer sees after each inner solve, before the momentum step.
pub struct OuterStep<'a, T: Real> {
    pub t: usize,
    pub sub: &'a InnerSubproblem<T>,
    pub nu: T,
    pub result: &'a InnerResult<T>,
    pub set: &'a FeasibleSet<T>,
}

pub fn afista_run<T: Real>(
    obj: &dyn SmoothObjective<T>,
    set: &FeasibleSet<T>,
    config: &AfistaConfig<T>,
    x0: &Point<T>,
    f_star: Option<T>,
) -> Result<RunOutcome<T>> {
    afista_run_observed(obj, set, config, x0, f_star, &mut |_| {})
}

/// Runs `T` outer iterations from `x0 = y0`.
///
/// An inner solver hitting its iteration cap ends the run early with an
/// aborted status and the rows gathered so far. Call accounting is
/// reconciled against the counting oracle after every inner solve.
pub fn afista_run_observed<T: Real>(
    obj: &dyn SmoothObjective<T>,
    set: &FeasibleSet<T>,
    config: &AfistaConfig<T>,
    x0: &Point<T>,
    f_star: Option<T>,
    observer: &mut dyn FnMut(&OuterStep<'_, T>),
) -> Result<RunOutcome<T>> {
    set.check_shape(x0)?;
    if obj.shape() != set.shape() {
        return Err(invalid("objective and feasible set disagree on shape"));
    }
    if !set.contains(x0, feas_tol()) {
        return Err(invalid("starting point is not feasible"));
    }
    let schedule = &config.schedule;
    let oracle = CountingOracle::new(set);
    let error_of = |x: &Point<T>| to_f64(obj.value(x) - f_star.unwrap_or(T::zero()));
    let error_kind = if f_star.is_some() { ErrorKind::Gap } else { ErrorKind::Value };
    let r_hat = config.r_hat();
    let mut trace = RunTrace::new(config.algorithm(), None, r_hat, error_kind, error_of(x0));

    let mut x_prev = x0.clone();
    let mut y = x0.clone();
    for t in 1..=schedule.horizon {
        let started = Instant::now();
        let nu = schedule.nu(t)?;
        let grad = obj.gradient(&y);
        oracle.record_fo();
        let sub = InnerSubproblem::new(grad, y, x_prev.clone(), schedule.lambda(t), schedule.beta)?;

        let before = oracle.counts();
        let result = match inner::solve(config.inner, &sub, &oracle, nu, &config.inner_options) {
            Ok(res) => res,
            Err(err @ Error::IterationCap { .. }) => {
                trace.status = RunStatus::Aborted {
                    outer_iter: t,
                    reason: err.to_string(),
                };
                break;
            }
            Err(err) => return Err(err),
        };
        let after = oracle.counts();
        reconcile(t, &result, before, after)?;

        let (audit_stop_value, audit_omega) = if config.audit {
            (
                to_f64(audit_stop(&sub, &result, set)?),
                to_f64(omega_gap_uncounted(&sub, &result.x, set)?),
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        observer(&OuterStep {
            t,
            sub: &sub,
            nu,
            result: &result,
            set,
        });

        let x_new = result.x;
        let step_dist = lit::<T>(0.5) * (&x_new - &x_prev).norm_squared();
        y = y_update(&x_new, &x_prev, t, schedule.a);
        let wall_ns = started.elapsed().as_nanos() as u64;
        trace.rows.push(TraceRow {
            outer_iter: t,
            error: error_of(&x_new),
            fo: after.fo,
            loo: after.loo,
            sparse_proj: after.sparse_proj,
            loo_equiv: after.loo_equivalents(r_hat),
            inner_iters: result.inner_iterations as u64,
            branch: result.branch,
            nu: to_f64(nu),
            certificate: to_f64(result.certificate),
            audit_stop: audit_stop_value,
            audit_omega,
            step_dist: to_f64(step_dist),
            wall_ns,
        });
        x_prev = x_new;
    }

    let counts = oracle.counts();
    if counts.fo != trace.rows.len() as u64 + u64::from(!trace.is_completed()) {
        return Err(Error::Accounting(format!(
            "{} first-order calls for {} outer iterations",
            counts.fo,
            trace.rows.len()
        )));
    }
    Ok(RunOutcome {
        trace,
        x_final: x_prev,
        counts,
    })
}

fn reconcile<T: Real>(
    t: usize,
    res: &InnerResult<T>,
    before: crate::oracles::CallCounts,
    after: crate::oracles::CallCounts,
) -> Result<()> {
    let loo = after.loo - before.loo;
    let sp = after.sparse_proj - before.sparse_proj;
    let ep = after.exact_proj - before.exact_proj;
    if loo != res.loo_calls || sp != res.sparse_proj_calls || ep != res.exact_proj_calls {
        return Err(Error::Accounting(format!(
            "outer iteration {t}: oracle saw (loo {loo}, sparse {sp}, exact {ep}), solver reported ({}, {}, {})",
            res.loo_calls, res.sparse_proj_calls, res.exact_proj_calls
        )));
    }
    // Loops spend one LOO per iteration plus one up front: the vertex
    // initialization for AFW, the acceptance test after a sparse projection.
    let expected_loo = match res.branch {
        Branch::AfwLoop | Branch::FwLoop => Some(res.inner_iterations as u64 + 1),
        Branch::SparseProjectionHit => Some(1),
        Branch::ExactProjection => Some(0),
        Branch::None => None,
    };
    if let Some(expected) = expected_loo {
        if loo != expected {
            return Err(Error::Accounting(format!(
                "outer iteration {t}: {loo} LOO calls on branch {} with {} inner iterations",
                res.branch.label(),
                res.inner_iterations
            )));
        }
    }
    Ok(())
}
