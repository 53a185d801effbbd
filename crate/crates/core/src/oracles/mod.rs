//! Feasible sets and their oracles.
//!
//! Every set exposes a linear optimization oracle (LOO). The simplex, the
//! l1 ball, the spectrahedron and the nuclear-norm ball additionally expose
//! exact Euclidean projection and sparse projection (projection restricted
//! to points of face dimension, or rank, at most `r`).
//!
//! Polytopes also expose their vertices by integer id so that active sets
//! can be kept as `(id, weight)` pairs:
//!
//! * `Simplex(n)`: id `j` is `e_j`.
//! * `L1Ball(n)`: id `2j` is `+e_j`, id `2j + 1` is `-e_j`.
//! * `VPolytope`: id `j` is the `j`-th listed vertex.

mod counting;
pub mod simplex;
pub mod spectral;

use std::fmt;

use nalgebra::DMatrix;

pub use counting::{CallCounts, CountingOracle};

use crate::error::{invalid, Error, Result};
use crate::scalar::{AddScaled, feas_tol, is_finite, lit, zero_tol, Point, Real};

/// Which convex set.
#[derive(Clone, Debug, PartialEq)]
pub enum SetKind<T: Real> {
    Simplex { n: usize },
    L1Ball { n: usize },
    VPolytope { vertices: Vec<Point<T>> },
    Spectrahedron { n: usize },
    NuclearBall { m: usize, n: usize },
}

/// A compact convex set `K` with its Euclidean diameter.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleSet<T: Real> {
    kind: SetKind<T>,
    diameter: T,
}

/// Face dimension (polytopes) or rank (matrix domains).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SparsityValue(pub usize);

impl<T: Real> fmt::Display for FeasibleSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SetKind::Simplex { n } => write!(f, "Simplex({n})"),
            SetKind::L1Ball { n } => write!(f, "L1Ball({n})"),
            SetKind::VPolytope { vertices } => write!(f, "VPolytope({} vertices)", vertices.len()),
            SetKind::Spectrahedron { n } => write!(f, "Spectrahedron({n})"),
            SetKind::NuclearBall { m, n } => write!(f, "NuclearBall({m}x{n})"),
        }
    }
}

impl<T: Real> FeasibleSet<T> {
    pub fn simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("simplex dimension must be at least 1"));
        }
        Ok(Self {
            kind: SetKind::Simplex { n },
            diameter: lit(2f64.sqrt()),
        })
    }

    pub fn l1_ball(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("l1 ball dimension must be at least 1"));
        }
        Ok(Self {
            kind: SetKind::L1Ball { n },
            diameter: lit(2.0),
        })
    }

    /// Convex hull of the given column vectors.
    pub fn v_polytope(vertices: Vec<Point<T>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| invalid("vertex list must be nonempty"))?;
        let n = first.nrows();
        if n == 0 {
            return Err(invalid("vertices must have positive dimension"));
        }
        for v in &vertices {
            if v.ncols() != 1 || v.nrows() != n {
                return Err(invalid("vertices must be column vectors of equal length"));
            }
            if !is_finite(v) {
                return Err(invalid("vertices must be finite"));
            }
        }
        let mut diameter = T::zero();
        for (i, a) in vertices.iter().enumerate() {
            for b in &vertices[i + 1..] {
                let d = (a - b).norm();
                if d == T::zero() {
                    return Err(invalid("vertices must be pairwise distinct"));
                }
                diameter = diameter.max(d);
            }
        }
        Ok(Self {
            kind: SetKind::VPolytope { vertices },
            diameter,
        })
    }

    pub fn spectrahedron(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("spectrahedron dimension must be at least 1"));
        }
        Ok(Self {
            kind: SetKind::Spectrahedron { n },
            diameter: lit(2f64.sqrt()),
        })
    }

    pub fn nuclear_ball(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("nuclear ball dimensions must be positive"));
        }
        Ok(Self {
            kind: SetKind::NuclearBall { m, n },
            diameter: lit(2.0),
        })
    }

    pub fn kind(&self) -> &SetKind<T> {
        &self.kind
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    /// `(rows, cols)` of points in this set.
    pub fn shape(&self) -> (usize, usize) {
        match &self.kind {
            SetKind::Simplex { n } | SetKind::L1Ball { n } => (*n, 1),
            SetKind::VPolytope { vertices } => (vertices[0].nrows(), 1),
            SetKind::Spectrahedron { n } => (*n, *n),
            SetKind::NuclearBall { m, n } => (*m, *n),
        }
    }

    pub fn is_polytope(&self) -> bool {
        matches!(
            self.kind,
            SetKind::Simplex { .. } | SetKind::L1Ball { .. } | SetKind::VPolytope { .. }
        )
    }

    pub fn supports_projection(&self) -> bool {
        !matches!(self.kind, SetKind::VPolytope { .. })
    }

    pub fn check_shape(&self, x: &Point<T>) -> Result<()> {
        let (r, c) = self.shape();
        if x.nrows() != r || x.ncols() != c {
            return Err(invalid(format!(
                "point of shape {}x{} does not match {} (expected {r}x{c})",
                x.nrows(),
                x.ncols(),
                self
            )));
        }
        Ok(())
    }

    fn check_finite_input(&self, x: &Point<T>) -> Result<()> {
        self.check_shape(x)?;
        if !is_finite(x) {
            return Err(invalid("non-finite entries in oracle input"));
        }
        Ok(())
    }

    fn unsupported(&self, operation: &'static str) -> Error {
        Error::Unsupported {
            operation,
            set: self.to_string(),
        }
    }

    /// A canonical interior-ish starting point: the simplex barycenter, the
    /// vertex mean, `I/n`, or zero.
    pub fn barycenter(&self) -> Point<T> {
        let (r, c) = self.shape();
        match &self.kind {
            SetKind::Simplex { n } => DMatrix::from_element(*n, 1, T::one() / lit(*n as f64)),
            SetKind::VPolytope { vertices } => {
                let mut acc = DMatrix::zeros(r, 1);
                for v in vertices {
                    acc += v;
                }
                acc / lit::<T>(vertices.len() as f64)
            }
            SetKind::Spectrahedron { n } => DMatrix::identity(*n, *n) / lit::<T>(*n as f64),
            SetKind::L1Ball { .. } | SetKind::NuclearBall { .. } => DMatrix::zeros(r, c),
        }
    }

    /// Membership within the absolute tolerance `tol` (simplex entries and
    /// sum, spectrahedron eigenvalues and trace, ball norms).
    pub fn contains(&self, x: &Point<T>, tol: T) -> bool {
        if self.check_shape(x).is_err() || !is_finite(x) {
            return false;
        }
        match &self.kind {
            SetKind::Simplex { .. } => {
                let sum = x.iter().fold(T::zero(), |a, &v| a + v);
                x.iter().all(|&v| v >= -tol) && (sum - T::one()).abs() <= tol
            }
            SetKind::L1Ball { .. } => x.iter().fold(T::zero(), |a, &v| a + v.abs()) <= T::one() + tol,
            SetKind::VPolytope { .. } => self.vpolytope_member(x, tol),
            SetKind::Spectrahedron { .. } => {
                let asym = (x - x.transpose()).norm();
                let eig = spectral::sym_eigen(x);
                let spectral_tol = tol * lit(10.0);
                asym <= spectral_tol
                    && eig.values.iter().all(|&l| l >= -spectral_tol)
                    && (x.trace() - T::one()).abs() <= spectral_tol
            }
            SetKind::NuclearBall { .. } => {
                let nuc = spectral::svd(x).values.iter().fold(T::zero(), |a, &s| a + s);
                nuc <= T::one() + tol
            }
        }
    }

    /// Membership in a vertex hull by Frank-Wolfe on `1/2 ||w - x||^2`: inside
    /// once the distance drops below `tol`, outside once the duality lower
    /// bound `f(w) - gap` exceeds `tol^2 / 2`.
    fn vpolytope_member(&self, x: &Point<T>, tol: T) -> bool {
        let SetKind::VPolytope { vertices } = &self.kind else {
            return false;
        };
        let half = lit::<T>(0.5);
        let mut w = vertices[0].clone();
        for _ in 0..100_000 {
            let g = &w - x;
            let value = half * g.norm_squared();
            if g.norm() <= tol {
                return true;
            }
            let j = argmin_first(vertices.iter().map(|v| v.dot(&g)));
            let d = &vertices[j] - &w;
            let gap = -g.dot(&d);
            if value - gap > half * tol * tol {
                return false;
            }
            let gamma = (gap / d.norm_squared()).min(T::one());
            w += d * gamma;
        }
        false
    }

    /// Allowed sparsity values `(min, max)` for sparse projection.
    pub fn sparsity_range(&self) -> Result<(usize, usize)> {
        match &self.kind {
            SetKind::Simplex { n } | SetKind::L1Ball { n } => Ok((0, n - 1)),
            SetKind::Spectrahedron { n } => Ok((1, *n)),
            SetKind::NuclearBall { m, n } => Ok((0, (*m).min(*n))),
            SetKind::VPolytope { .. } => Err(self.unsupported("sparse projection")),
        }
    }

    /// Linear optimization oracle: an extreme point minimizing `<u, g>`.
    pub fn loo(&self, g: &Point<T>) -> Result<Point<T>> {
        self.check_finite_input(g)?;
        match &self.kind {
            SetKind::Simplex { .. } | SetKind::L1Ball { .. } | SetKind::VPolytope { .. } => {
                let id = self.loo_vertex_unchecked(g);
                Ok(self.vertex(id))
            }
            SetKind::Spectrahedron { .. } => {
                let eig = spectral::sym_eigen(g);
                let v = eig.vectors.column(eig.values.len() - 1).into_owned();
                Ok(&v * v.transpose())
            }
            SetKind::NuclearBall { .. } => {
                let dec = spectral::svd(g);
                let u = dec.u.column(0).into_owned();
                let v = dec.v.column(0).into_owned();
                Ok(-(&u * v.transpose()))
            }
        }
    }

    /// LOO for polytopes returning the vertex id. Lowest id wins ties.
    pub fn loo_vertex(&self, g: &Point<T>) -> Result<usize> {
        if !self.is_polytope() {
            return Err(self.unsupported("vertex-indexed LOO"));
        }
        self.check_finite_input(g)?;
        Ok(self.loo_vertex_unchecked(g))
    }

    fn loo_vertex_unchecked(&self, g: &Point<T>) -> usize {
        match &self.kind {
            SetKind::Simplex { .. } => argmin_first(g.iter().copied()),
            SetKind::L1Ball { .. } => {
                let j = argmin_first(g.iter().map(|v| -v.abs()));
                if g[j] > T::zero() {
                    2 * j + 1
                } else {
                    2 * j
                }
            }
            SetKind::VPolytope { vertices } => argmin_first(vertices.iter().map(|v| v.dot(g))),
            _ => unreachable!("polytope kinds only"),
        }
    }

    pub fn num_vertices(&self) -> Option<usize> {
        match &self.kind {
            SetKind::Simplex { n } => Some(*n),
            SetKind::L1Ball { n } => Some(2 * n),
            SetKind::VPolytope { vertices } => Some(vertices.len()),
            _ => None,
        }
    }

    /// Dense vertex `id`.
    pub fn vertex(&self, id: usize) -> Point<T> {
        let (r, _) = self.shape();
        match &self.kind {
            SetKind::Simplex { .. } => {
                let mut v = DMatrix::zeros(r, 1);
                v[id] = T::one();
                v
            }
            SetKind::L1Ball { .. } => {
                let mut v = DMatrix::zeros(r, 1);
                v[id / 2] = if id.is_multiple_of(2) { T::one() } else { -T::one() };
                v
            }
            SetKind::VPolytope { vertices } => vertices[id].clone(),
            _ => panic!("{self} has no vertex ids"),
        }
    }

    /// `<vertex(id), g>` without materializing the vertex.
    pub fn vertex_dot(&self, id: usize, g: &Point<T>) -> T {
        match &self.kind {
            SetKind::Simplex { .. } => g[id],
            SetKind::L1Ball { .. } => {
                if id.is_multiple_of(2) {
                    g[id / 2]
                } else {
                    -g[id / 2]
                }
            }
            SetKind::VPolytope { vertices } => vertices[id].dot(g),
            _ => panic!("{self} has no vertex ids"),
        }
    }

    /// `x += scale * vertex(id)`.
    pub fn add_vertex(&self, id: usize, scale: T, x: &mut Point<T>) {
        match &self.kind {
            SetKind::Simplex { .. } => x[id] += scale,
            SetKind::L1Ball { .. } => {
                if id.is_multiple_of(2) {
                    x[id / 2] += scale
                } else {
                    x[id / 2] -= scale
                }
            }
            SetKind::VPolytope { vertices } => x.add_scaled(scale, &vertices[id]),
            _ => panic!("{self} has no vertex ids"),
        }
    }

    /// Sparse `(coordinate, value)` form of vertex `id`.
    pub fn vertex_entries(&self, id: usize) -> Vec<(usize, T)> {
        match &self.kind {
            SetKind::Simplex { .. } => vec![(id, T::one())],
            SetKind::L1Ball { .. } => {
                vec![(id / 2, if id.is_multiple_of(2) { T::one() } else { -T::one() })]
            }
            SetKind::VPolytope { vertices } => vertices[id]
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != T::zero())
                .map(|(i, v)| (i, *v))
                .collect(),
            _ => panic!("{self} has no vertex ids"),
        }
    }

    /// Convex decomposition of a simplex or l1-ball point into vertex ids.
    /// Weights below `1e-12` are dropped and the remainder renormalized.
    pub fn decompose(&self, x: &Point<T>) -> Result<Vec<(usize, T)>> {
        self.check_finite_input(x)?;
        let prune = lit::<T>(1e-12);
        let mut parts: Vec<(usize, T)> = match &self.kind {
            SetKind::Simplex { .. } => x
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > prune)
                .map(|(j, &v)| (j, v))
                .collect(),
            SetKind::L1Ball { .. } => {
                let mut parts: Vec<(usize, T)> = x
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.abs() > prune)
                    .map(|(j, &v)| (if v > T::zero() { 2 * j } else { 2 * j + 1 }, v.abs()))
                    .collect();
                let used = parts.iter().fold(T::zero(), |a, p| a + p.1);
                let slack = T::one() - used;
                if slack > prune {
                    // Split the slack evenly between +e_0 and -e_0.
                    let half = slack / lit(2.0);
                    for id in [0usize, 1] {
                        match parts.iter_mut().find(|p| p.0 == id) {
                            Some(p) => p.1 += half,
                            None => parts.push((id, half)),
                        }
                    }
                    parts.sort_by_key(|p| p.0);
                }
                parts
            }
            _ => return Err(self.unsupported("vertex decomposition")),
        };
        let total = parts.iter().fold(T::zero(), |a, p| a + p.1);
        if parts.is_empty() || total <= T::zero() {
            return Err(invalid("cannot decompose a point with no mass"));
        }
        for p in parts.iter_mut() {
            p.1 /= total;
        }
        Ok(parts)
    }

    /// Exact Euclidean projection onto the set.
    pub fn exact_project(&self, x: &Point<T>) -> Result<Point<T>> {
        self.check_finite_input(x)?;
        match &self.kind {
            SetKind::Simplex { .. } => {
                let mut out = x.clone();
                simplex::project_simplex(out.as_mut_slice());
                Ok(out)
            }
            SetKind::L1Ball { .. } => {
                let mut out = x.clone();
                simplex::project_l1_ball(out.as_mut_slice());
                Ok(out)
            }
            SetKind::Spectrahedron { .. } => {
                let eig = spectral::sym_eigen(x);
                let mut values = eig.values.clone();
                simplex::project_simplex(&mut values);
                Ok(spectral::reassemble(&eig.vectors, &values, &eig.vectors))
            }
            SetKind::NuclearBall { .. } => {
                let dec = spectral::svd(x);
                let mut values = dec.values.clone();
                simplex::project_capped_nonneg(&mut values);
                Ok(spectral::reassemble(&dec.u, &values, &dec.v))
            }
            SetKind::VPolytope { .. } => Err(self.unsupported("exact projection")),
        }
    }

    /// Projection onto the points of sparsity at most `r`.
    ///
    /// Simplex: the `r + 1` largest signed entries are projected onto the
    /// simplex, the rest zeroed. L1 ball: same with the `r + 1` largest
    /// magnitudes. Spectrahedron: the top `r` signed eigenpairs are kept and
    /// their eigenvalues projected onto the simplex. Nuclear ball: the top
    /// `r` singular triplets are kept and their values projected onto the
    /// nonnegative part of the l1 ball.
    pub fn sparse_project(&self, x: &Point<T>, r: SparsityValue) -> Result<Point<T>> {
        let (lo, hi) = self.sparsity_range()?;
        if r.0 < lo || r.0 > hi {
            return Err(invalid(format!(
                "sparsity {} outside [{lo}, {hi}] for {self}",
                r.0
            )));
        }
        self.check_finite_input(x)?;
        match &self.kind {
            SetKind::Simplex { .. } | SetKind::L1Ball { .. } => {
                let is_simplex = matches!(self.kind, SetKind::Simplex { .. });
                let keys: Vec<T> = if is_simplex {
                    x.iter().copied().collect()
                } else {
                    x.iter().map(|v| v.abs()).collect()
                };
                let keep = simplex::top_k_indices(&keys, r.0 + 1);
                let mut kept: Vec<T> = keep.iter().map(|&i| x[i]).collect();
                if is_simplex {
                    simplex::project_simplex(&mut kept);
                } else {
                    simplex::project_l1_ball(&mut kept);
                }
                let mut out = DMatrix::zeros(x.nrows(), 1);
                for (&i, v) in keep.iter().zip(kept) {
                    out[i] = v;
                }
                Ok(out)
            }
            SetKind::Spectrahedron { .. } => {
                let eig = spectral::sym_eigen(x);
                let mut values: Vec<T> = eig.values[..r.0].to_vec();
                simplex::project_simplex(&mut values);
                Ok(spectral::reassemble(&eig.vectors, &values, &eig.vectors))
            }
            SetKind::NuclearBall { .. } => {
                let dec = spectral::svd(x);
                let mut values: Vec<T> = dec.values[..r.0].to_vec();
                simplex::project_capped_nonneg(&mut values);
                Ok(spectral::reassemble(&dec.u, &values, &dec.v))
            }
            SetKind::VPolytope { .. } => unreachable!("rejected by sparsity_range"),
        }
    }

    /// Sparsity of a feasible point: `support - 1` for the simplex and the
    /// l1 ball, numerical rank for matrix domains. Entries (or eigen and
    /// singular values) count as zero below `1e-9` times the largest one.
    pub fn sp_measure(&self, x: &Point<T>) -> Result<SparsityValue> {
        if !self.contains(x, feas_tol()) {
            return Err(invalid(format!("point is not feasible for {self}")));
        }
        let count_above = |values: &[T]| -> usize {
            let largest = values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            if largest == T::zero() {
                return 0;
            }
            let cut = largest * zero_tol::<T>();
            values.iter().filter(|v| v.abs() > cut).count()
        };
        match &self.kind {
            SetKind::Simplex { .. } | SetKind::L1Ball { .. } => {
                let values: Vec<T> = x.iter().copied().collect();
                Ok(SparsityValue(count_above(&values).saturating_sub(1)))
            }
            SetKind::Spectrahedron { .. } => {
                Ok(SparsityValue(count_above(&spectral::sym_eigen(x).values)))
            }
            SetKind::NuclearBall { .. } => Ok(SparsityValue(count_above(&spectral::svd(x).values))),
            SetKind::VPolytope { .. } => Err(self.unsupported("sparsity measure")),
        }
    }
}

/// Index of the first minimum.
fn argmin_first<T: Real>(values: impl Iterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_val: Option<T> = None;
    for (i, v) in values.enumerate() {
        if best_val.is_none_or(|b| v < b) {
            best = i;
            best_val = Some(v);
        }
    }
    best
}
