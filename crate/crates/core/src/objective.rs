//! Smooth convex objectives.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::scalar::{AddScaled, lit, Point, Real};

/// A convex, `beta`-smooth function on the ambient space of a feasible set.
pub trait SmoothObjective<T: Real>: Sync {
    /// `(rows, cols)` of admissible points.
    fn shape(&self) -> (usize, usize);

    fn value(&self, x: &Point<T>) -> T;

    fn gradient(&self, x: &Point<T>) -> Point<T>;

    /// Lipschitz constant of the gradient.
    fn smoothness(&self) -> T;

    /// `s^T H s` for objectives with a constant Hessian `H`.
    fn curvature(&self, _s: &Point<T>) -> Option<T> {
        None
    }

    /// Gradient at `(1 - gamma) x + gamma v` given the gradient at `x`, for
    /// a sparse vertex `v` listed as `(coordinate, value)` pairs. `None`
    /// when the objective has no cheap update.
    fn gradient_toward(&self, _grad: &Point<T>, _gamma: T, _vertex: &[(usize, T)]) -> Option<Point<T>> {
        None
    }
}

/// `f(x) = 1/2 x^T A x + b^T x` on column vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObjective<T: Real> {
    a: DMatrix<T>,
    b: Point<T>,
    beta: T,
}

impl<T: Real> QuadraticObjective<T> {
    /// `beta` defaults to the largest eigenvalue of `A`.
    pub fn new(a: DMatrix<T>, b: Point<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != 1 || n == 0 {
            return Err(invalid("A must be n x n and b must be n x 1"));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > lit::<T>(1e-12) * a.amax().max(T::one()) {
            return Err(invalid("A must be symmetric"));
        }
        let eig = a.clone().symmetric_eigenvalues();
        let beta = eig.iter().fold(T::zero(), |m, &v| m.max(v));
        if eig.iter().any(|&v| v < -lit::<T>(1e-9) * beta.max(T::one())) {
            return Err(invalid("A must be positive semidefinite"));
        }
        Ok(Self { a, b, beta })
    }

    /// Takes `beta` as given (the caller knows the spectrum).
    pub fn with_smoothness(a: DMatrix<T>, b: Point<T>, beta: T) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != 1 || n == 0 {
            return Err(invalid("A must be n x n and b must be n x 1"));
        }
        if beta <= T::zero() {
            return Err(invalid("smoothness must be positive"));
        }
        Ok(Self { a, b, beta })
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Point<T> {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

impl<T: Real> SmoothObjective<T> for QuadraticObjective<T> {
    fn shape(&self) -> (usize, usize) {
        (self.a.nrows(), 1)
    }

    fn value(&self, x: &Point<T>) -> T {
        let ax = &self.a * x;
        lit::<T>(0.5) * x.dot(&ax) + self.b.dot(x)
    }

    fn gradient(&self, x: &Point<T>) -> Point<T> {
        &self.a * x + &self.b
    }

    fn smoothness(&self) -> T {
        self.beta
    }

    fn curvature(&self, s: &Point<T>) -> Option<T> {
        Some(s.dot(&(&self.a * s)))
    }

    /// One column read of `A` per vertex coordinate: `O(n)` for simplex and
    /// l1-ball vertices.
    fn gradient_toward(&self, grad: &Point<T>, gamma: T, vertex: &[(usize, T)]) -> Option<Point<T>> {
        let mut out = grad * (T::one() - gamma);
        out.add_scaled(gamma, &self.b);
        for &(j, v) in vertex {
            out.column_mut(0).axpy(gamma * v, &self.a.column(j), T::one());
        }
        Some(out)
    }
}

/// `f(X) = beta/2 ||X - C||_F^2`, usable on any domain shape.
#[derive(Clone, Debug, PartialEq)]
pub struct SquaredDistance<T: Real> {
    center: Point<T>,
    beta: T,
}

impl<T: Real> SquaredDistance<T> {
    pub fn new(center: Point<T>, beta: T) -> Result<Self> {
        if beta <= T::zero() {
            return Err(invalid("smoothness must be positive"));
        }
        Ok(Self { center, beta })
    }

    pub fn center(&self) -> &Point<T> {
        &self.center
    }
}

impl<T: Real> SmoothObjective<T> for SquaredDistance<T> {
    fn shape(&self) -> (usize, usize) {
        self.center.shape()
    }

    fn value(&self, x: &Point<T>) -> T {
        lit::<T>(0.5) * self.beta * (x - &self.center).norm_squared()
    }

    fn gradient(&self, x: &Point<T>) -> Point<T> {
        (x - &self.center) * self.beta
    }

    fn smoothness(&self) -> T {
        self.beta
    }

    fn curvature(&self, s: &Point<T>) -> Option<T> {
        Some(self.beta * s.norm_squared())
    }
}

fn check_shape<T: Real>(obj: &dyn SmoothObjective<T>, x: &Point<T>) -> Result<()> {
    let (r, c) = obj.shape();
    if x.shape() != (r, c) {
        return Err(invalid(format!(
            "point of shape {:?} does not match objective shape {:?}",
            x.shape(),
            (r, c)
        )));
    }
    Ok(())
}

/// `(f(x), grad f(x))` with a shape check.
pub fn eval<T: Real>(obj: &dyn SmoothObjective<T>, x: &Point<T>) -> Result<(T, Point<T>)> {
    check_shape(obj, x)?;
    Ok((obj.value(x), obj.gradient(x)))
}

/// Running `(x, grad f(x))` pair for a quadratic, advanced toward single
/// vertices in `O(n)` per step.
#[derive(Clone, Debug)]
pub struct IncrementalGradient<T: Real> {
    pub x: Point<T>,
    pub grad: Point<T>,
}

impl<T: Real> IncrementalGradient<T> {
    pub fn new(obj: &QuadraticObjective<T>, x: Point<T>) -> Result<Self> {
        let (_, grad) = eval(obj, &x)?;
        Ok(Self { x, grad })
    }

    /// `x <- (1 - gamma) x + gamma v` for `v` given in sparse form.
    pub fn step_toward(&mut self, obj: &QuadraticObjective<T>, gamma: T, vertex: &[(usize, T)]) {
        self.x *= T::one() - gamma;
        for &(j, v) in vertex {
            self.x[j] += gamma * v;
        }
        self.grad = obj
            .gradient_toward(&self.grad, gamma, vertex)
            .expect("quadratic objectives support incremental gradients");
    }
}

/// Minimizer of `q(gamma) = slope * gamma + curvature * gamma^2 / 2` on
/// `[0, gamma_max]`. Flat or concave directions go to an endpoint.
pub fn clamped_quadratic_step<T: Real>(slope: T, curvature: T, direction_sq_norm: T, gamma_max: T) -> T {
    if curvature <= lit::<T>(1e-14) * direction_sq_norm {
        return if slope < T::zero() { gamma_max } else { T::zero() };
    }
    (-slope / curvature).max(T::zero()).min(gamma_max)
}

/// `argmin_{gamma in [0, gamma_max]} f(w + gamma s)`.
///
/// Closed form when the objective reports its curvature, golden-section
/// search otherwise.
pub fn exact_line_search<T: Real>(
    obj: &dyn SmoothObjective<T>,
    w: &Point<T>,
    s: &Point<T>,
    gamma_max: T,
) -> Result<T> {
    if !(gamma_max >= T::zero()) {
        return Err(invalid("gamma_max must be nonnegative"));
    }
    check_shape(obj, w)?;
    check_shape(obj, s)?;
    match obj.curvature(s) {
        Some(curv) => {
            let slope = s.dot(&obj.gradient(w));
            Ok(clamped_quadratic_step(slope, curv, s.norm_squared(), gamma_max))
        }
        None => Ok(golden_section(|g| obj.value(&(w + s * g)), T::zero(), gamma_max, lit(1e-12))),
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T, tol: T) -> T {
    let inv_phi = lit::<T>((5f64.sqrt() - 1.0) / 2.0);
    let mut c = hi - (hi - lo) * inv_phi;
    let mut d = lo + (hi - lo) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if hi - lo <= tol {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * inv_phi;
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * inv_phi;
            fd = f(d);
        }
    }
    let mid = (lo + hi) * lit(0.5);
    // Endpoints win when the function is monotone on the interval.
    [lo, mid, hi]
        .into_iter()
        .map(|g| (g, f(g)))
        .fold((mid, f(mid)), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0
}

/// Largest relative deviation between the analytic gradient and central
/// differences with step `1e-6`. Deviations are taken relative to
/// `max(1, |analytic|)`.
pub fn finite_diff_check<T: Real>(obj: &dyn SmoothObjective<T>, x: &Point<T>) -> T {
    let h = lit::<T>(1e-6);
    let grad = obj.gradient(x);
    let mut worst = T::zero();
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = obj.value(&probe);
        probe[i] = orig - h;
        let down = obj.value(&probe);
        probe[i] = orig;
        let numeric = (up - down) / (h + h);
        let dev = (grad[i] - numeric).abs() / grad[i].abs().max(T::one());
        worst = worst.max(dev);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::column;

    struct Constant;
    impl SmoothObjective<f64> for Constant {
        fn shape(&self) -> (usize, usize) {
            (3, 1)
        }
        fn value(&self, _x: &Point<f64>) -> f64 {
            4.0
        }
        fn gradient(&self, _x: &Point<f64>) -> Point<f64> {
            DMatrix::zeros(3, 1)
        }
        fn smoothness(&self) -> f64 {
            1.0
        }
    }

    /// `1/2 (x - c)^2` in one dimension, without curvature information.
    struct Shifted(f64);
    impl SmoothObjective<f64> for Shifted {
        fn shape(&self) -> (usize, usize) {
            (1, 1)
        }
        fn value(&self, x: &Point<f64>) -> f64 {
            0.5 * (x[0] - self.0).powi(2)
        }
        fn gradient(&self, x: &Point<f64>) -> Point<f64> {
            column(&[x[0] - self.0])
        }
        fn smoothness(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn identity_quadratic() {
        let q = QuadraticObjective::<f64>::new(DMatrix::identity(3, 3), DMatrix::zeros(3, 1)).unwrap();
        let (v, g) = eval(&q, &column(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(g, column(&[1.0, 0.0, 0.0]));
        assert!(eval(&q, &column(&[1.0])).is_err());
    }

    #[test]
    fn rejects_bad_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(QuadraticObjective::new(asym, DMatrix::zeros(2, 1)).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(QuadraticObjective::new(indef, DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn line_search_examples() {
        let f = QuadraticObjective::<f64>::new(DMatrix::identity(1, 1), DMatrix::zeros(1, 1)).unwrap();
        let g = exact_line_search(&f, &column(&[0.0]), &column(&[1.0]), 1.0).unwrap();
        assert_eq!(g, 0.0);
        let shifted = QuadraticObjective::<f64>::new(DMatrix::identity(1, 1), column(&[-0.3])).unwrap();
        let g = exact_line_search(&shifted, &column(&[0.0]), &column(&[1.0]), 1.0).unwrap();
        assert!((g - 0.3).abs() < 1e-15);
        assert!(exact_line_search(&f, &column(&[0.0]), &column(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn golden_section_fallback() {
        let g = exact_line_search(&Shifted(0.3), &column(&[0.0]), &column(&[1.0]), 1.0).unwrap();
        assert!((g - 0.3).abs() < 1e-6);
        let g = exact_line_search(&Shifted(5.0), &column(&[0.0]), &column(&[1.0]), 1.0).unwrap();
        assert_eq!(g, 1.0);
        let g = exact_line_search(&Shifted(-1.0), &column(&[0.0]), &column(&[1.0]), 1.0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn flat_direction_goes_to_endpoint() {
        assert_eq!(clamped_quadratic_step(-1.0, 0.0, 1.0, 0.7), 0.7);
        assert_eq!(clamped_quadratic_step(1.0, 0.0, 1.0, 0.7), 0.0);
        assert_eq!(clamped_quadratic_step(0.0, 0.0, 1.0, 0.7), 0.0);
    }

    #[test]
    fn constant_objective_has_zero_fd_error() {
        assert_eq!(finite_diff_check(&Constant, &column(&[0.1, 0.2, 0.3])), 0.0);
    }

    #[test]
    fn identity_fd_error_small() {
        let q = QuadraticObjective::<f64>::new(DMatrix::identity(4, 4), DMatrix::zeros(4, 1)).unwrap();
        assert!(finite_diff_check(&q, &column(&[0.3, -0.7, 1.1, 0.05])) <= 1e-6);
    }

    #[test]
    fn squared_distance_matrix_domain() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let f = SquaredDistance::new(c.clone(), 3.0).unwrap();
        assert_eq!(f.value(&c), 0.0);
        assert!(finite_diff_check(&f, &DMatrix::zeros(2, 2)) < 1e-6);
    }
}
