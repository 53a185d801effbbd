//! Random quadratic instances over the simplex with a planted optimum of
//! known support and a controllable strict-complementarity gap.
//!
//! Construction, for `(n, r, delta, beta, seed)`:
//!
//! * `A = Q diag(lambda) Q^T` with `Q` a Haar-random orthogonal matrix,
//!   `lambda_1 = beta` and the remaining eigenvalues uniform on `(0, beta]`;
//! * `x*` is uniform (flat Dirichlet) on a random support `S` of size `r`,
//!   with weights clipped below at `1e-3` and renormalized;
//! * `b = -A x* + delta z*` where `z*` is the indicator of the complement
//!   of `S`, so that the gradient at `x*` is `0` on `S` and `delta` off it.
//!
//! All randomness is drawn from a ChaCha8 stream seeded with `seed`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::{QuadraticObjective, SmoothObjective};
use crate::scalar::{lit, to_f64, Point, Real};

/// Smallest planted weight before renormalization.
pub const MIN_PLANTED_WEIGHT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub n: usize,
    pub r: usize,
    pub delta: f64,
    pub beta: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticInstance<T: Real> {
    pub objective: QuadraticObjective<T>,
    pub x_star: Point<T>,
    pub f_star: T,
    /// Sorted support of `x_star`.
    pub support: Vec<usize>,
    pub meta: InstanceMeta,
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl<T: Real> QuadraticInstance<T> {
    pub fn generate(n: usize, r: usize, delta: f64, beta: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        if r == 0 || r > n {
            return Err(invalid(format!("r = {r} must lie in [1, n = {n}]")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(invalid("beta must be positive and finite"));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid("delta must be nonnegative and finite"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let q = random_orthogonal(n, &mut rng);
        let mut spectrum = vec![beta; n];
        for lambda in spectrum.iter_mut().skip(1) {
            // 1 - U lies in (0, 1].
            *lambda = beta * (1.0 - rng.random::<f64>());
        }
        let mut a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spectrum)) * q.transpose();
        a = (&a + a.transpose()) * 0.5;

        let mut support = sample(&mut rng, n, r).into_vec();
        support.sort_unstable();
        let mut weights: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w = (*w / total).max(MIN_PLANTED_WEIGHT);
        }
        let total: f64 = weights.iter().sum();
        let mut x_star = DMatrix::<f64>::zeros(n, 1);
        for (&i, w) in support.iter().zip(&weights) {
            x_star[i] = w / total;
        }

        let mut z_star = DMatrix::<f64>::from_element(n, 1, 1.0);
        for &i in &support {
            z_star[i] = 0.0;
        }
        let b = -(&a * &x_star) + z_star * delta;

        let meta = InstanceMeta {
            n,
            r,
            delta,
            beta,
            seed,
        };
        Self::from_parts(a, b, x_star, support, meta)
    }

    fn from_parts(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        x_star: DMatrix<f64>,
        support: Vec<usize>,
        meta: InstanceMeta,
    ) -> Result<Self> {
        let cast = |m: &DMatrix<f64>| m.map(lit::<T>);
        let objective = QuadraticObjective::with_smoothness(cast(&a), cast(&b), lit(meta.beta))?;
        let x_star = cast(&x_star);
        let f_star = objective.value(&x_star);
        Ok(Self {
            objective,
            x_star,
            f_star,
            support,
            meta,
        })
    }

    /// Error `f(x) - f*`.
    pub fn error(&self, x: &Point<T>) -> T {
        self.objective.value(x) - self.f_star
    }

    pub fn to_file(&self) -> InstanceFile {
        let n = self.meta.n;
        let a = self.objective.a();
        InstanceFile {
            format: INSTANCE_FORMAT.to_string(),
            meta: self.meta,
            a_row_major: (0..n)
                .flat_map(|i| (0..n).map(move |j| to_f64(a[(i, j)])))
                .collect(),
            b: self.objective.b().iter().map(|&v| to_f64(v)).collect(),
            x_star: self.x_star.iter().map(|&v| to_f64(v)).collect(),
            support: self.support.clone(),
            f_star: to_f64(self.f_star),
        }
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        let n = file.meta.n;
        if file.format != INSTANCE_FORMAT {
            return Err(invalid(format!("unknown instance format {:?}", file.format)));
        }
        if file.a_row_major.len() != n * n || file.b.len() != n || file.x_star.len() != n {
            return Err(invalid("instance arrays do not match n"));
        }
        let a = DMatrix::from_row_slice(n, n, &file.a_row_major);
        let b = DMatrix::from_column_slice(n, 1, &file.b);
        let x = DMatrix::from_column_slice(n, 1, &file.x_star);
        Self::from_parts(a, b, x, file.support.clone(), file.meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file()).expect("instance serializes");
        fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: InstanceFile = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_file(&file)
    }
}

pub const INSTANCE_FORMAT: &str = "afista-quadratic-instance/1";

/// On-disk JSON layout. Floats are written in shortest round-trip form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format: String,
    pub meta: InstanceMeta,
    pub a_row_major: Vec<f64>,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
    pub support: Vec<usize>,
    pub f_star: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_at_optimum_is_complementary() {
        let inst = QuadraticInstance::<f64>::generate(30, 4, 0.7, 10.0, 3).unwrap();
        let g = inst.objective.gradient(&inst.x_star);
        for i in 0..30 {
            let expected = if inst.support.contains(&i) { 0.0 } else { 0.7 };
            assert!((g[i] - expected).abs() < 1e-9, "coordinate {i}: {}", g[i]);
        }
    }

    #[test]
    fn zero_delta_gives_stationary_optimum() {
        let inst = QuadraticInstance::<f64>::generate(12, 3, 0.0, 5.0, 11).unwrap();
        let g = inst.objective.gradient(&inst.x_star);
        assert!(g.amax() < 1e-12);
    }

    #[test]
    fn planted_point_is_interior_to_its_face() {
        let inst = QuadraticInstance::<f64>::generate(40, 8, 1.0, 10.0, 5).unwrap();
        assert_eq!(inst.support.len(), 8);
        let sum: f64 = inst.x_star.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for &i in &inst.support {
            assert!(inst.x_star[i] > 0.5 * MIN_PLANTED_WEIGHT);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(QuadraticInstance::<f64>::generate(5, 6, 0.1, 1.0, 0).is_err());
        assert!(QuadraticInstance::<f64>::generate(5, 0, 0.1, 1.0, 0).is_err());
        assert!(QuadraticInstance::<f64>::generate(5, 2, 0.1, 0.0, 0).is_err());
        assert!(QuadraticInstance::<f64>::generate(5, 2, -0.1, 1.0, 0).is_err());
    }

    #[test]
    fn same_seed_same_instance() {
        let a = QuadraticInstance::<f64>::generate(20, 3, 0.1, 100.0, 42).unwrap();
        let b = QuadraticInstance::<f64>::generate(20, 3, 0.1, 100.0, 42).unwrap();
        assert_eq!(a, b);
        let c = QuadraticInstance::<f64>::generate(20, 3, 0.1, 100.0, 43).unwrap();
        assert_ne!(a.x_star, c.x_star);
    }

    #[test]
    fn file_round_trip_is_exact() {
        let inst = QuadraticInstance::<f64>::generate(9, 2, 0.5, 10.0, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        inst.save(&path).unwrap();
        let back = QuadraticInstance::<f64>::load(&path).unwrap();
        assert_eq!(back, inst);
    }
}
