//! Dense symmetric eigendecomposition and SVD, sorted in descending order.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::scalar::{Point, Real};

/// `(values, vectors)` with eigenvalues in descending order and the
/// matching unit eigenvectors as columns.
pub struct SortedEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

/// Singular triplets with singular values in descending order.
pub struct SortedSvd<T: Real> {
    pub values: Vec<T>,
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
}

pub fn symmetrize<T: Real>(x: &Point<T>) -> Point<T> {
    let half = T::one() / (T::one() + T::one());
    (x + x.transpose()) * half
}

pub fn sym_eigen<T: Real>(x: &Point<T>) -> SortedEigen<T> {
    let eig = SymmetricEigen::new(symmetrize(x));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    SortedEigen { values, vectors }
}

pub fn svd<T: Real>(x: &Point<T>) -> SortedSvd<T> {
    let dec = x.clone().svd(true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v_t = dec.v_t.expect("right singular vectors requested");
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        dec.singular_values[b]
            .partial_cmp(&dec.singular_values[a])
            .expect("finite singular values")
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(x.nrows(), k, |r, c| u[(r, order[c])]);
    let v_sorted = DMatrix::from_fn(x.ncols(), k, |r, c| v_t[(order[c], r)]);
    SortedSvd {
        values,
        u: u_sorted,
        v: v_sorted,
    }
}

/// `sum_i weights[i] * left_i * right_i^T` over the first `weights.len()` columns.
pub fn reassemble<T: Real>(left: &DMatrix<T>, weights: &[T], right: &DMatrix<T>) -> Point<T> {
    let mut out = DMatrix::zeros(left.nrows(), right.nrows());
    for (i, &w) in weights.iter().enumerate() {
        if w != T::zero() {
            out.ger(w, &left.column(i), &right.column(i), T::one());
        }
    }
    out
}
