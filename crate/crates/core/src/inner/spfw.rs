use super::{afw_loop, fw_loop, ActiveSet, InnerOptions, InnerResult, LoopKind};
use crate::accel::InnerSubproblem;
use crate::error::Result;
use crate::oracles::{CountingOracle, SparsityValue};
use crate::scalar::Real;
use crate::trace::Branch;

/// Sparse projection first, Frank-Wolfe only if it is rejected.
///
/// With `p = y_{t-1} - grad / beta`, take `x = P_r(p)` (sparse projection)
/// and `u = loo(x - p)`. If `<x - u, x - p> <= nu` then `x` is returned
/// as is. Otherwise a Frank-Wolfe or away-step loop on `Phi_t`, warm-started
/// at `x`, runs to Wolfe gap `nu` and `x_t = mix(w)` is returned.
pub fn spfw_solve<T: Real>(
    sub: &InnerSubproblem<T>,
    oracle: &CountingOracle<'_, T>,
    nu: T,
    r_hat: SparsityValue,
    loop_kind: LoopKind,
    opts: &InnerOptions,
) -> Result<InnerResult<T>> {
    let set = oracle.set();
    let p = sub.prox_center();
    let x = oracle.sparse_project(&p, r_hat)?;
    let d = &x - &p;
    let u = oracle.loo(&d)?;
    let test = (&x - u).dot(&d);

    let mut res = InnerResult::new(x, Branch::SparseProjectionHit);
    res.sparse_proj_calls = 1;
    res.loo_calls = 1;
    if test <= nu {
        res.certificate = test;
        return Ok(res);
    }

    let start = res.x.clone();
    let w = match loop_kind {
        LoopKind::Fw => {
            res.branch = Branch::FwLoop;
            fw_loop(sub, oracle, nu, start, opts, &mut res)?
        }
        LoopKind::Afw => {
            res.branch = Branch::AfwLoop;
            let active = ActiveSet::from_weights(set.decompose(&start)?);
            afw_loop(sub, oracle, nu, active, opts, &mut res)?
        }
    };
    res.x = sub.mix(&w);
    res.w = Some(w);
    Ok(res)
}
