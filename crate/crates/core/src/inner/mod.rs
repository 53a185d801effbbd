//! Inner solvers for the accelerated subproblems, plus the two
//! projection-free baselines.

mod afw;
mod cgs;
mod fw;
mod spfw;

pub use afw::afw_solve;
pub use cgs::{cgs_run, CgsParameters};
pub use fw::vanilla_fw_run;
pub use spfw::spfw_solve;

use crate::accel::InnerSubproblem;
use crate::error::{Error, Result};
use crate::oracles::{CountingOracle, FeasibleSet};
use crate::scalar::{AddScaled, lit, to_f64, Point, Real};
use crate::trace::Branch;

/// Weights below this are treated as numerical dust and pruned.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Explicit convex decomposition `w = sum_j rho_j v_j` over polytope
/// vertex ids.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet<T: Real> {
    entries: Vec<(usize, T)>,
}

impl<T: Real> ActiveSet<T> {
    pub fn singleton(id: usize) -> Self {
        Self {
            entries: vec![(id, T::one())],
        }
    }

    /// From `(id, weight)` pairs; pruned and renormalized.
    pub fn from_weights(entries: Vec<(usize, T)>) -> Self {
        let mut set = Self { entries };
        set.prune_and_normalize();
        set
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight_of(&self, id: usize) -> Option<T> {
        self.entries.iter().find(|e| e.0 == id).map(|e| e.1)
    }

    pub fn reconstruct(&self, set: &FeasibleSet<T>) -> Point<T> {
        let (r, c) = set.shape();
        let mut w = Point::zeros(r, c);
        for &(id, rho) in &self.entries {
            set.add_vertex(id, rho, &mut w);
        }
        w
    }

    fn prune_and_normalize(&mut self) {
        let tol = lit::<T>(WEIGHT_TOL);
        self.entries.retain(|e| e.1 > tol);
        let total = self.entries.iter().fold(T::zero(), |a, e| a + e.1);
        if total > T::zero() {
            for e in self.entries.iter_mut() {
                e.1 /= total;
            }
        }
    }

    /// Frank-Wolfe move `w <- (1 - gamma) w + gamma v_id`.
    fn toward(&mut self, id: usize, gamma: T) {
        if gamma >= T::one() {
            self.entries.clear();
            self.entries.push((id, T::one()));
            return;
        }
        for e in self.entries.iter_mut() {
            e.1 *= T::one() - gamma;
        }
        match self.entries.iter_mut().find(|e| e.0 == id) {
            Some(e) => e.1 += gamma,
            None => self.entries.push((id, gamma)),
        }
        self.prune_and_normalize();
    }

    /// Away move `w <- (1 + gamma) w - gamma v_id`; `drop` removes the vertex
    /// outright (the step hit `gamma_max`). Returns whether a drop happened.
    fn away_from(&mut self, id: usize, gamma: T, drop: bool) -> bool {
        for e in self.entries.iter_mut() {
            e.1 *= T::one() + gamma;
        }
        if drop {
            self.entries.retain(|e| e.0 != id);
        } else if let Some(e) = self.entries.iter_mut().find(|e| e.0 == id) {
            e.1 -= gamma;
        }
        self.prune_and_normalize();
        drop
    }

    /// Positivity, normalization within `1e-10`, and reconstruction of
    /// `w` within `1e-8`.
    pub fn check(&self, set: &FeasibleSet<T>, w: &Point<T>) -> std::result::Result<(), String> {
        let tol = lit::<T>(WEIGHT_TOL);
        if let Some(e) = self.entries.iter().find(|e| e.1 <= tol) {
            return Err(format!("weight {} of vertex {} not above tolerance", e.1, e.0));
        }
        let total = self.entries.iter().fold(T::zero(), |a, e| a + e.1);
        if (total - T::one()).abs() > lit(1e-10) {
            return Err(format!("weights sum to {total}"));
        }
        let err = (self.reconstruct(set) - w).norm();
        if err > lit(1e-8) {
            return Err(format!("reconstruction error {err}"));
        }
        Ok(())
    }
}

/// Which loop runs when the sparse projection is rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopKind {
    Fw,
    Afw,
}

/// Inner solver used by the accelerated outer loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerSolverKind {
    Afw,
    SparseProjection { r_hat: usize, loop_kind: LoopKind },
    /// `x_t = argmin phi_t` by exact projection; a reference, not a
    /// projection-free method.
    ExactProjection,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InnerOptions {
    /// Iteration cap; `None` uses `10 n ln(1/nu) + 10^4`.
    pub cap: Option<usize>,
    /// Keep per-step diagnostics in [`InnerResult::steps`].
    pub record_steps: bool,
}

impl InnerOptions {
    pub fn cap_for<T: Real>(&self, dim: usize, nu: T) -> usize {
        self.cap.unwrap_or_else(|| {
            let nu = to_f64(nu).max(1e-300);
            let logs = (1.0 / nu).ln().max(0.0);
            (10.0 * dim as f64 * logs + 1e4).min(1e9) as usize
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    FrankWolfe,
    Away,
    Drop,
}

/// One inner iteration (recorded on request).
#[derive(Clone, Debug, PartialEq)]
pub struct InnerStep<T: Real> {
    /// `Phi_t` before the step.
    pub phi_before: T,
    /// `Phi_t` after the step.
    pub phi_after: T,
    pub kind: StepKind,
    pub gamma: T,
    pub active_size: usize,
    /// Active-set invariant violation, if any.
    pub active_set_violation: Option<String>,
}

/// Outcome of one inner solve.
#[derive(Clone, Debug)]
pub struct InnerResult<T: Real> {
    /// The new outer iterate `x_t`.
    pub x: Point<T>,
    /// Final inner iterate `w` for loop branches.
    pub w: Option<Point<T>>,
    /// Stopping value: the test quantity that fell below `nu_t`.
    pub certificate: T,
    pub inner_iterations: usize,
    pub loo_calls: u64,
    pub sparse_proj_calls: u64,
    pub exact_proj_calls: u64,
    pub branch: Branch,
    pub active_set: Option<ActiveSet<T>>,
    pub drop_steps: usize,
    /// Size of the active set an away-step loop started from.
    pub initial_active: usize,
    /// Vertex ids returned by the LOO inside polytope loops, in call order.
    pub loo_vertices: Vec<usize>,
    pub steps: Vec<InnerStep<T>>,
}

impl<T: Real> InnerResult<T> {
    pub(crate) fn new(x: Point<T>, branch: Branch) -> Self {
        Self {
            x,
            w: None,
            certificate: T::zero(),
            inner_iterations: 0,
            loo_calls: 0,
            sparse_proj_calls: 0,
            exact_proj_calls: 0,
            branch,
            active_set: None,
            drop_steps: 0,
            initial_active: 0,
            loo_vertices: Vec::new(),
            steps: Vec::new(),
        }
    }
}

/// Exact minimizer of `phi_t`: the projection of `y - grad/beta`.
pub fn exact_solve<T: Real>(sub: &InnerSubproblem<T>, oracle: &CountingOracle<'_, T>) -> Result<InnerResult<T>> {
    let x = oracle.exact_project(&sub.prox_center())?;
    let mut res = InnerResult::new(x, Branch::ExactProjection);
    res.exact_proj_calls = 1;
    Ok(res)
}

/// Dispatch on the solver kind.
pub fn solve<T: Real>(
    kind: InnerSolverKind,
    sub: &InnerSubproblem<T>,
    oracle: &CountingOracle<'_, T>,
    nu: T,
    opts: &InnerOptions,
) -> Result<InnerResult<T>> {
    match kind {
        InnerSolverKind::Afw => afw_solve(sub, oracle, nu, opts),
        InnerSolverKind::SparseProjection { r_hat, loop_kind } => {
            spfw_solve(sub, oracle, nu, crate::oracles::SparsityValue(r_hat), loop_kind, opts)
        }
        InnerSolverKind::ExactProjection => exact_solve(sub, oracle),
    }
}

/// Plain Frank-Wolfe with exact line search on `Phi_t`, from `w`.
pub(crate) fn fw_loop<T: Real>(
    sub: &InnerSubproblem<T>,
    oracle: &CountingOracle<'_, T>,
    nu: T,
    mut w: Point<T>,
    opts: &InnerOptions,
    res: &mut InnerResult<T>,
) -> Result<Point<T>> {
    let set = oracle.set();
    let cap = opts.cap_for(w.len(), nu);
    let kappa = sub.curvature();
    let mut iteration = 0usize;
    loop {
        iteration += 1;
        let grad = sub.grad_big_phi(&w);
        let u = if set.is_polytope() {
            let id = oracle.loo_vertex(&grad)?;
            res.loo_vertices.push(id);
            set.vertex(id)
        } else {
            oracle.loo(&grad)?
        };
        res.loo_calls += 1;
        let s = &u - &w;
        let gap = -s.dot(&grad);
        res.inner_iterations = iteration;
        if gap <= nu {
            res.certificate = gap;
            return Ok(w);
        }
        if iteration >= cap {
            return Err(Error::IterationCap {
                solver: "frank-wolfe inner loop",
                cap,
                last_gap: to_f64(gap),
                tolerance: to_f64(nu),
            });
        }
        let s_sq = s.norm_squared();
        let gamma = crate::objective::clamped_quadratic_step(-gap, kappa * s_sq, s_sq, T::one());
        let phi_before = if opts.record_steps { sub.big_phi(&w) } else { T::zero() };
        w.add_scaled(gamma, &s);
        if opts.record_steps {
            res.steps.push(InnerStep {
                phi_before,
                phi_after: sub.big_phi(&w),
                kind: StepKind::FrankWolfe,
                gamma,
                active_size: 0,
                active_set_violation: None,
            });
        }
    }
}

/// Away-step Frank-Wolfe on `Phi_t` from an explicit active set.
pub(crate) fn afw_loop<T: Real>(
    sub: &InnerSubproblem<T>,
    oracle: &CountingOracle<'_, T>,
    nu: T,
    mut active: ActiveSet<T>,
    opts: &InnerOptions,
    res: &mut InnerResult<T>,
) -> Result<Point<T>> {
    let set = oracle.set();
    let (rows, cols) = set.shape();
    let cap = opts.cap_for(rows * cols, nu);
    let kappa = sub.curvature();
    res.initial_active = active.len();
    let mut iteration = 0usize;
    loop {
        iteration += 1;
        let w = active.reconstruct(set);
        let grad = sub.grad_big_phi(&w);
        let u = oracle.loo_vertex(&grad)?;
        res.loo_calls += 1;
        res.loo_vertices.push(u);
        let w_dot = w.dot(&grad);
        let u_dot = set.vertex_dot(u, &grad);
        let gap = w_dot - u_dot;
        res.inner_iterations = iteration;
        if gap <= nu {
            res.certificate = gap;
            res.active_set = Some(active);
            return Ok(w);
        }
        if iteration >= cap {
            return Err(Error::IterationCap {
                solver: "away-step frank-wolfe",
                cap,
                last_gap: to_f64(gap),
                tolerance: to_f64(nu),
            });
        }

        // Away vertex: the active vertex with the largest <v, grad>.
        let (z, z_dot, rho) = active
            .entries()
            .iter()
            .map(|&(id, rho)| (id, set.vertex_dot(id, &grad), rho))
            .fold(None, |best: Option<(usize, T, T)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
            .expect("active set is never empty");
        let fw_slope = u_dot - w_dot;
        let away_slope = w_dot - z_dot;

        let phi_before = if opts.record_steps { sub.big_phi(&w) } else { T::zero() };
        let kind = if active.len() == 1 || fw_slope < away_slope {
            let mut s = set.vertex(u);
            s -= &w;
            let s_sq = s.norm_squared();
            let gamma = crate::objective::clamped_quadratic_step(fw_slope, kappa * s_sq, s_sq, T::one());
            active.toward(u, gamma);
            (StepKind::FrankWolfe, gamma)
        } else {
            let mut s = w.clone();
            set.add_vertex(z, -T::one(), &mut s);
            let s_sq = s.norm_squared();
            let gamma_max = rho / (T::one() - rho);
            let gamma = crate::objective::clamped_quadratic_step(away_slope, kappa * s_sq, s_sq, gamma_max);
            let dropped = active.away_from(z, gamma, gamma == gamma_max);
            if dropped {
                res.drop_steps += 1;
                (StepKind::Drop, gamma)
            } else {
                (StepKind::Away, gamma)
            }
        };
        if opts.record_steps {
            let w_next = active.reconstruct(set);
            res.steps.push(InnerStep {
                phi_before,
                phi_after: sub.big_phi(&w_next),
                kind: kind.0,
                gamma: kind.1,
                active_size: active.len(),
                active_set_violation: active.check(set, &w_next).err(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::column;

    #[test]
    fn active_set_moves() {
        let set = FeasibleSet::<f64>::simplex(3).unwrap();
        let mut a = ActiveSet::singleton(0);
        a.toward(1, 0.25);
        assert_eq!(a.weight_of(0), Some(0.75));
        assert_eq!(a.weight_of(1), Some(0.25));
        let w = a.reconstruct(&set);
        assert!(a.check(&set, &w).is_ok());
        // Away from vertex 1 up to gamma_max = 0.25 / 0.75 drops it.
        assert!(a.away_from(1, 0.25 / 0.75, true));
        assert_eq!(a.entries(), &[(0, 1.0)]);
        a.toward(2, 1.0);
        assert_eq!(a.entries(), &[(2, 1.0)]);
        assert_eq!(a.reconstruct(&set), column(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn dust_is_pruned() {
        let a = ActiveSet::<f64>::from_weights(vec![(0, 1.0), (1, 1e-15)]);
        assert_eq!(a.entries(), &[(0, 1.0)]);
    }

    #[test]
    fn default_cap_formula() {
        let opts = InnerOptions::default();
        let cap = opts.cap_for(100, 1e-4);
        let expected = (10.0 * 100.0 * (1e4f64).ln() + 1e4) as usize;
        assert_eq!(cap, expected);
        assert_eq!(opts.cap_for(100, 10.0), 10_000);
    }
}
