use super::{afw_loop, ActiveSet, InnerOptions, InnerResult};
use crate::accel::InnerSubproblem;
use crate::error::Result;
use crate::oracles::CountingOracle;
use crate::scalar::Real;
use crate::trace::Branch;

/// Away-step Frank-Wolfe on `Phi_t`, started from the vertex that the LOO
/// returns for `grad Phi_t(x_{t-1})`. Stops once the Wolfe gap of `Phi_t`
/// is at most `nu` and returns `x_t = mix(w)`.
///
/// The fresh vertex start (rather than a warm start at the previous
/// iterate) is what lets the LOO answers settle on the optimal face.
pub fn afw_solve<T: Real>(
    sub: &InnerSubproblem<T>,
    oracle: &CountingOracle<'_, T>,
    nu: T,
    opts: &InnerOptions,
) -> Result<InnerResult<T>> {
    let set = oracle.set();
    let start = oracle.loo_vertex(&sub.grad_big_phi(&sub.x_prev))?;
    let mut res = InnerResult::new(set.vertex(start), Branch::AfwLoop);
    res.loo_calls = 1;
    res.loo_vertices.push(start);
    let w = afw_loop(sub, oracle, nu, ActiveSet::singleton(start), opts, &mut res)?;
    res.x = sub.mix(&w);
    res.w = Some(w);
    Ok(res)
}
