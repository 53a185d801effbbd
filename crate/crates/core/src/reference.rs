//! Slow, independent reference solvers used to check the fast oracles.
//!
//! Everything here favours transparency over speed: support enumeration
//! instead of sort-and-threshold, alternating projections instead of a
//! single spectral step, plain projected gradient for constrained minima.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::accel::InnerSubproblem;
use crate::objective::SmoothObjective;
use crate::oracles::spectral;
use crate::oracles::FeasibleSet;

/// Every subset of `0..n` of size `k`, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Projection onto `{y >= 0, sum y = 1}` restricted to `support`, by
/// enumerating every candidate active set: for each nonempty `S` inside
/// `support`, the equality-constrained minimizer `y_S = x_S - (sum x_S - 1)/|S|`
/// is kept if nonnegative; the closest kept candidate wins.
pub fn simplex_projection_on_support(x: &[f64], support: &[usize]) -> Vec<f64> {
    let n = x.len();
    let m = support.len();
    assert!(m > 0 && m <= 20, "enumeration is exponential in the support size");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << m) {
        let s: Vec<usize> = (0..m).filter(|b| mask & (1 << b) != 0).map(|b| support[b]).collect();
        let shift = (s.iter().map(|&i| x[i]).sum::<f64>() - 1.0) / s.len() as f64;
        let mut y = vec![0.0; n];
        let mut ok = true;
        for &i in &s {
            y[i] = x[i] - shift;
            ok &= y[i] >= 0.0;
        }
        if !ok {
            continue;
        }
        let d = sq_dist(&y, x);
        if best.as_ref().is_none_or(|b| d < b.0) {
            best = Some((d, y));
        }
    }
    best.expect("the best single vertex is always a candidate").1
}

/// Exact simplex projection by active-set enumeration.
pub fn simplex_projection(x: &[f64]) -> Vec<f64> {
    let all: Vec<usize> = (0..x.len()).collect();
    simplex_projection_on_support(x, &all)
}

/// Sparse simplex projection by brute force: the closest point among the
/// restricted projections onto every support of size `r + 1`.
pub fn sparse_simplex_projection(x: &[f64], r: usize) -> Vec<f64> {
    let k = (r + 1).min(x.len());
    subsets(x.len(), k)
        .into_iter()
        .map(|s| simplex_projection_on_support(x, &s))
        .map(|y| (sq_dist(&y, x), y))
        .fold(None::<(f64, Vec<f64>)>, |best, cur| match best {
            Some(b) if b.0 <= cur.0 => Some(b),
            _ => Some(cur),
        })
        .expect("at least one support")
        .1
}

/// Spectrahedron projection by Dykstra's alternating projections between
/// the PSD cone (eigenvalue clipping) and the unit-trace hyperplane.
pub fn spectrahedron_projection(x: &DMatrix<f64>, tol: f64, max_iter: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let clip_psd = |m: &DMatrix<f64>| {
        let eig = spectral::sym_eigen(m);
        let vals: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
        spectral::reassemble(&eig.vectors, &vals, &eig.vectors)
    };
    let to_trace_one = |m: &DMatrix<f64>| {
        let shift = (m.trace() - 1.0) / n as f64;
        m - DMatrix::identity(n, n) * shift
    };
    let mut y = spectral::symmetrize(x);
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    for _ in 0..max_iter {
        let a = clip_psd(&(&y + &p));
        p = &y + &p - &a;
        let b = to_trace_one(&(&a + &q));
        q = &a + &q - &b;
        let change = (&b - &y).norm();
        y = b;
        if change < tol {
            break;
        }
    }
    y
}

/// Projection of `sigma` onto `{s >= 0, sum s <= 1}` by active-set
/// enumeration (either the sum constraint is slack and `s = max(sigma, 0)`,
/// or it is tight and some support is shifted).
pub fn capped_nonneg_projection(sigma: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = sigma.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    simplex_projection(sigma)
}

/// Nuclear-ball projection without an SVD: the right singular vectors and
/// singular values come from the eigendecomposition of `X^T X`, the values
/// are projected by enumeration, and the result is `X V diag(s / sigma) V^T`.
pub fn nuclear_projection(x: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = x.transpose() * x;
    let eig = spectral::sym_eigen(&gram);
    let k = x.nrows().min(x.ncols());
    let sigma: Vec<f64> = eig.values[..k].iter().map(|v| v.max(0.0).sqrt()).collect();
    let proj = capped_nonneg_projection(&sigma);
    let ratios: Vec<f64> = proj
        .iter()
        .zip(&sigma)
        .map(|(&p, &s)| if p > 0.0 { p / s } else { 0.0 })
        .collect();
    let xv = x * &eig.vectors;
    spectral::reassemble(&xv, &ratios, &eig.vectors)
}

/// Optimality residual of `p` as the projection of `x` onto `set`:
/// `max_{z in K} <x - p, z - p>`, which is `<= 0` exactly at the
/// projection. The maximum over `K` is evaluated with the LOO.
pub fn projection_residual(set: &FeasibleSet<f64>, x: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let d = x - p;
    let z = set.loo(&(-&d)).expect("finite input");
    d.dot(&(z - p))
}

/// Projected gradient with step `1/beta` from `x0` until the gradient
/// mapping `beta ||x - P(x - grad/beta)||` is at most `tol`.
pub fn projected_gradient_minimum(
    obj: &dyn SmoothObjective<f64>,
    set: &FeasibleSet<f64>,
    x0: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> (DMatrix<f64>, f64) {
    let beta = obj.smoothness();
    let mut x = x0.clone();
    for _ in 0..max_iter {
        let next = set
            .exact_project(&(&x - obj.gradient(&x) / beta))
            .expect("projection supported");
        let mapping = beta * (&next - &x).norm();
        x = next;
        if mapping <= tol {
            break;
        }
    }
    let v = obj.value(&x);
    (x, v)
}

/// `omega_t(x)` by dense enumeration of `w` on a grid over the 2-simplex.
pub fn omega_on_grid(sub: &InnerSubproblem<f64>, x: &DMatrix<f64>, points: usize) -> f64 {
    assert_eq!(x.nrows(), 2, "grid enumeration is for the 2-simplex");
    let gp = sub.grad_phi(x);
    (0..=points)
        .map(|i| {
            let a = i as f64 / points as f64;
            let w = DMatrix::from_column_slice(2, 1, &[a, 1.0 - a]);
            (x - sub.mix(&w)).dot(&gp)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random point of the spectrahedron: `G G^T / tr(G G^T)` with a random
/// rank between 1 and `n`.
pub fn random_spectrahedron_point(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let k = rng.random_range(1..=n);
    let g = DMatrix::<f64>::from_fn(n, k, |_, _| rng.sample(StandardNormal));
    let m = &g * g.transpose();
    let tr = m.trace();
    m / tr
}

/// Random point of the nuclear unit ball with nuclear norm uniform in `[0, 1]`.
pub fn random_nuclear_point(m: usize, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    let nuc: f64 = spectral::svd(&g).values.iter().sum();
    g * (rng.random::<f64>() / nuc)
}

/// Random symmetric matrix with standard normal entries (scaled by `scale`).
pub fn random_symmetric(n: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    spectral::symmetrize(&g)
}
