//! Sort-and-threshold projection kernels on plain slices.

use crate::scalar::Real;

/// Euclidean projection of `v` onto the unit simplex, in place.
pub fn project_simplex<T: Real>(v: &mut [T]) {
    if v.is_empty() {
        return;
    }
    let theta = simplex_threshold(v);
    for x in v.iter_mut() {
        *x = (*x - theta).max(T::zero());
    }
}

/// Threshold `theta` such that `sum_i max(v_i - theta, 0) = 1`.
pub fn simplex_threshold<T: Real>(v: &[T]) -> T {
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let count = T::from_usize(j + 1).unwrap();
        let candidate = (cumsum - T::one()) / count;
        if u - candidate > T::zero() {
            theta = candidate;
        } else {
            break;
        }
    }
    theta
}

/// Euclidean projection onto the unit l1 ball, in place.
pub fn project_l1_ball<T: Real>(v: &mut [T]) {
    let norm: T = v.iter().fold(T::zero(), |acc, x| acc + x.abs());
    if norm <= T::one() {
        return;
    }
    let mut magnitudes: Vec<T> = v.iter().map(|x| x.abs()).collect();
    project_simplex(&mut magnitudes);
    for (x, m) in v.iter_mut().zip(magnitudes) {
        *x = if *x < T::zero() { -m } else { m };
    }
}

/// Projection of a nonnegative vector onto `{s >= 0, sum s <= 1}`.
pub fn project_capped_nonneg<T: Real>(v: &mut [T]) {
    for x in v.iter_mut() {
        *x = x.max(T::zero());
    }
    let total = v.iter().fold(T::zero(), |acc, &x| acc + x);
    if total > T::one() {
        project_simplex(v);
    }
}

/// Indices of the `k` largest keys, ties broken toward the lower index.
/// Returned in ascending index order.
pub fn top_k_indices<T: Real>(keys: &[T], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        keys[b]
            .partial_cmp(&keys[a])
            .expect("finite keys")
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order.sort_unstable();
    order
}
