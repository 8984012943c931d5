//! Smooth convex test problems and the evaluation contract solvers consume.
//!
//! A [`SmoothProblem`] bundles `f`, `∇f`, the Lipschitz constant `L` of the
//! gradient and, when known, a Hessian-vector product, the minimum value and
//! a minimizer. Quadratics `½⟨Ax, x⟩ − ⟨b, x⟩ + c` carry their matrix so that
//! resolvents `(I + sA)⁻¹` and exact Hessian-vector products are available.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{dot, norm, Matrix};
use crate::random;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("condition number must be >= 1, got {0}")]
    InvalidCondition(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered while evaluating the objective")]
    NonFiniteValue,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Symmetric PSD quadratic data `(A, b, c)` for `f(x) = ½⟨Ax, x⟩ − ⟨b, x⟩ + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec<T> {
    pub matrix: Matrix<T>,
    pub offset: Vec<T>,
    /// Constant term `c`; zero for the plain form.
    pub shift: T,
}

impl<T: Scalar> QuadraticSpec<T> {
    pub fn new(matrix: Matrix<T>, offset: Vec<T>) -> Self {
        Self {
            matrix,
            offset,
            shift: T::zero(),
        }
    }

    pub fn with_shift(mut self, shift: T) -> Self {
        self.shift = shift;
        self
    }
}

/// Validated quadratic with cached spectrum and factorization.
#[derive(Debug, Clone)]
pub struct Quadratic<T> {
    matrix: Matrix<T>,
    diagonal: Option<Vec<T>>,
    offset: Vec<T>,
    shift: T,
    eigenvalues: Vec<T>,
}

impl<T: Scalar> Quadratic<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn offset(&self) -> &[T] {
        &self.offset
    }

    /// Eigenvalues of `A`, ascending.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    fn apply_into(&self, v: &[T], out: &mut [T]) {
        match &self.diagonal {
            Some(d) => {
                for ((o, &di), &vi) in out.iter_mut().zip(d).zip(v) {
                    *o = di * vi;
                }
            }
            None => self.matrix.mul_vec_into(v, out),
        }
    }

    fn value(&self, x: &[T]) -> T {
        let half = T::lit(0.5);
        let quad = match &self.diagonal {
            Some(d) => d.iter().zip(x).fold(T::zero(), |acc, (&di, &xi)| acc + di * xi * xi),
            None => dot(&self.matrix.mul_vec(x), x),
        };
        half * quad - dot(&self.offset, x) + self.shift
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        self.apply_into(x, out);
        for (o, &bi) in out.iter_mut().zip(&self.offset) {
            *o -= bi;
        }
    }

    /// `prox_{s f}(y) = (I + sA)⁻¹ (y + s b)`.
    pub fn resolvent(&self, step: T, y: &[T]) -> Vec<T> {
        let rhs: Vec<T> = y.iter().zip(&self.offset).map(|(&yi, &bi)| yi + step * bi).collect();
        match &self.diagonal {
            Some(d) => rhs.iter().zip(d).map(|(&r, &di)| r / (T::one() + step * di)).collect(),
            None => {
                let shifted = self.matrix.scaled(step).shifted(T::one());
                shifted
                    .cholesky()
                    .expect("I + sA is positive definite for PSD A and s > 0")
                    .solve(&rhs)
            }
        }
    }

    fn is_zero(&self) -> bool {
        self.eigenvalues.iter().all(|&e| e == T::zero())
            && self.offset.iter().all(|&b| b == T::zero())
            && match &self.diagonal {
                Some(d) => d.iter().all(|&v| v == T::zero()),
                None => self.matrix.rows().iter().flatten().all(|&v| v == T::zero()),
            }
    }
}

type ValueFn<T> = dyn Fn(&[T]) -> T + Send + Sync;
type GradientFn<T> = dyn Fn(&[T], &mut [T]) + Send + Sync;
type HvpFn<T> = dyn Fn(&[T], &[T], &mut [T]) + Send + Sync;

#[derive(Clone)]
enum Body<T> {
    Quadratic(Arc<Quadratic<T>>),
    Custom {
        value: Arc<ValueFn<T>>,
        gradient: Arc<GradientFn<T>>,
        hvp: Option<Arc<HvpFn<T>>>,
    },
}

/// Immutable evaluation bundle for a smooth convex `f`.
#[derive(Clone)]
pub struct SmoothProblem<T> {
    dim: usize,
    lipschitz: T,
    strong_convexity: Option<T>,
    min_value: Option<T>,
    minimizer: Option<Vec<T>>,
    body: Body<T>,
}

impl<T: Scalar> fmt::Debug for SmoothProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothProblem")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("strong_convexity", &self.strong_convexity)
            .field("min_value", &self.min_value)
            .field("quadratic", &self.quadratic().is_some())
            .finish()
    }
}

impl<T: Scalar> SmoothProblem<T> {
    /// Wraps user-supplied value and gradient callbacks.
    pub fn from_fns<V, G>(dim: usize, lipschitz: T, value: V, gradient: G) -> Self
    where
        V: Fn(&[T]) -> T + Send + Sync + 'static,
        G: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        Self {
            dim,
            lipschitz,
            strong_convexity: None,
            min_value: None,
            minimizer: None,
            body: Body::Custom {
                value: Arc::new(value),
                gradient: Arc::new(gradient),
                hvp: None,
            },
        }
    }

    /// Attaches an analytic Hessian-vector product `(x, v, out) ↦ ∇²f(x) v`.
    /// Ignored for quadratics, which already carry one.
    pub fn with_hvp<H>(mut self, hvp: H) -> Self
    where
        H: Fn(&[T], &[T], &mut [T]) + Send + Sync + 'static,
    {
        if let Body::Custom { hvp: slot, .. } = &mut self.body {
            *slot = Some(Arc::new(hvp));
        }
        self
    }

    pub fn with_minimum(mut self, min_value: T, minimizer: Option<Vec<T>>) -> Self {
        self.min_value = Some(min_value);
        self.minimizer = minimizer;
        self
    }

    pub fn with_strong_convexity(mut self, mu: T) -> Self {
        self.strong_convexity = Some(mu);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    /// Strong-convexity modulus `μ` when known (smallest eigenvalue for quadratics).
    pub fn strong_convexity(&self) -> Option<T> {
        self.strong_convexity
    }

    pub fn min_value(&self) -> Option<T> {
        self.min_value
    }

    pub fn minimizer(&self) -> Option<&[T]> {
        self.minimizer.as_deref()
    }

    pub fn quadratic(&self) -> Option<&Quadratic<T>> {
        match &self.body {
            Body::Quadratic(q) => Some(q),
            Body::Custom { .. } => None,
        }
    }

    /// True when `f` is known to vanish identically.
    pub fn is_identically_zero(&self) -> bool {
        self.quadratic().is_some_and(|q| q.is_zero() && q.shift == T::zero())
    }

    pub fn value(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        match &self.body {
            Body::Quadratic(q) => q.value(x),
            Body::Custom { value, .. } => value(x),
        }
    }

    pub fn gradient_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.dim);
        match &self.body {
            Body::Quadratic(q) => q.gradient_into(x, out),
            Body::Custom { gradient, .. } => gradient(x, out),
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.dim];
        self.gradient_into(x, &mut g);
        g
    }

    pub fn has_hvp(&self) -> bool {
        match &self.body {
            Body::Quadratic(_) => true,
            Body::Custom { hvp, .. } => hvp.is_some(),
        }
    }

    /// Analytic `∇²f(x) v`, if the problem provides one.
    pub fn hvp(&self, x: &[T], v: &[T]) -> Option<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        match &self.body {
            Body::Quadratic(q) => q.apply_into(v, &mut out),
            Body::Custom { hvp: Some(h), .. } => h(x, v, &mut out),
            Body::Custom { hvp: None, .. } => return None,
        }
        Some(out)
    }

    /// `prox_{s f}(y)`, available in closed form for quadratics only.
    pub fn resolvent(&self, step: T, y: &[T]) -> Option<Vec<T>> {
        self.quadratic().map(|q| q.resolvent(step, y))
    }
}

/// Builds the quadratic `½⟨Ax, x⟩ − ⟨b, x⟩ + c` after validating symmetry and
/// positive semidefiniteness. Reports the minimizer and minimum when `A` is
/// invertible.
pub fn make_quadratic<T: Scalar>(spec: QuadraticSpec<T>) -> Result<SmoothProblem<T>, ObjectiveError> {
    let QuadraticSpec { matrix, offset, shift } = spec;
    let n = matrix.dim();
    if offset.len() != n {
        return Err(ObjectiveError::DimensionMismatch {
            expected: n,
            got: offset.len(),
        });
    }
    if n == 0 {
        return Err(ObjectiveError::InvalidArgument("dimension must be positive".into()));
    }
    let asymmetry = matrix.asymmetry();
    if !(asymmetry <= T::lit(1e-10)) {
        return Err(ObjectiveError::NotSymmetric {
            asymmetry: asymmetry.as_f64(),
        });
    }
    let diagonal = matrix.is_diagonal().then(|| matrix.diagonal());
    let eigenvalues = match &diagonal {
        Some(d) => {
            let mut e = d.clone();
            e.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            e
        }
        None => matrix.symmetric_eigenvalues(),
    };
    let min_eig = eigenvalues[0];
    if !(min_eig >= T::lit(-1e-12)) {
        return Err(ObjectiveError::NotPositiveSemidefinite {
            min_eigenvalue: min_eig.as_f64(),
        });
    }
    let lipschitz = eigenvalues[n - 1].max(T::zero());
    let mu = min_eig.max(T::zero());

    let factor = match &diagonal {
        Some(_) => None,
        None => matrix.cholesky(),
    };
    let minimizer = match &diagonal {
        // a zero curvature direction is harmless when the offset vanishes there
        Some(d) if d.iter().zip(&offset).all(|(&a, &b)| a > T::zero() || b == T::zero()) => Some(
            offset
                .iter()
                .zip(d)
                .map(|(&b, &a)| if a > T::zero() { b / a } else { T::zero() })
                .collect::<Vec<T>>(),
        ),
        Some(_) => None,
        None => factor.as_ref().map(|c| c.solve(&offset)),
    };

    let quad = Quadratic {
        matrix,
        diagonal,
        offset,
        shift,
        eigenvalues,
    };
    let min_value = minimizer.as_ref().map(|m| quad.value(m));
    let body = Body::Quadratic(Arc::new(quad));
    Ok(SmoothProblem {
        dim: n,
        lipschitz,
        strong_convexity: Some(mu),
        min_value,
        minimizer,
        body,
    })
}

/// `A = diag(1, condition)`, `b = 0`: the two-dimensional ill-conditioned test problem.
pub fn make_ill_conditioned_2d<T: Scalar>(condition: T) -> Result<SmoothProblem<T>, ObjectiveError> {
    if !(condition >= T::one()) || !condition.is_finite() {
        return Err(ObjectiveError::InvalidCondition(condition.as_f64()));
    }
    make_quadratic(QuadraticSpec::new(
        Matrix::from_diagonal(&[T::one(), condition]),
        vec![T::zero(); 2],
    ))
}

/// Seeded dense PSD quadratic with eigenvalues log-spaced in `[1, condition]`
/// and a standard-normal minimizer.
pub fn random_psd_quadratic<T: Scalar>(
    dim: usize,
    condition: f64,
    seed: u64,
) -> Result<SmoothProblem<T>, ObjectiveError> {
    if !(condition >= 1.0) {
        return Err(ObjectiveError::InvalidCondition(condition));
    }
    if dim == 0 {
        return Err(ObjectiveError::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = random::seeded(seed);
    let eigs = random::log_spaced(condition, 1.0, dim);
    let matrix: Matrix<T> = random::random_symmetric_with_spectrum(&mut rng, &eigs);
    let target: Vec<T> = random::gaussian_vec(&mut rng, dim).into_iter().map(T::lit).collect();
    let offset = matrix.mul_vec(&target);
    make_quadratic(QuadraticSpec::new(matrix, offset))
}

/// Diagonal quadratic whose eigenvalues are log-spaced in `[min_eigenvalue, 1]`
/// and whose minimizer has coordinates `λᵢ^{exponent/2}`.
///
/// Started from the origin, the initial error carries spectral weight
/// `λ^{exponent}` per log-interval of the spectrum. Over any window where the
/// spectrum is still being resolved, gradient descent then decays like
/// `k^{-(1+exponent)}` and inertial methods like `k^{-2(1+exponent)}`, which
/// makes sublinear-rate comparisons observable on a finite budget.
pub fn power_law_quadratic<T: Scalar>(
    dim: usize,
    min_eigenvalue: f64,
    exponent: f64,
) -> Result<SmoothProblem<T>, ObjectiveError> {
    if dim == 0 || !(min_eigenvalue > 0.0 && min_eigenvalue <= 1.0) {
        return Err(ObjectiveError::InvalidArgument(format!(
            "power-law quadratic needs dim > 0 and 0 < min_eigenvalue <= 1 (got dim={dim}, min_eigenvalue={min_eigenvalue})"
        )));
    }
    let eigs = random::log_spaced(1.0, min_eigenvalue, dim);
    let diag: Vec<T> = eigs.iter().map(|&l| T::lit(l)).collect();
    let offset: Vec<T> = eigs.iter().map(|&l| T::lit(l * l.powf(exponent / 2.0))).collect();
    make_quadratic(QuadraticSpec::new(Matrix::from_diagonal(&diag), offset))
}

/// `f ≡ 0` in dimension `dim`; every point is a minimizer.
pub fn zero_problem<T: Scalar>(dim: usize) -> SmoothProblem<T> {
    let mut p = make_quadratic(QuadraticSpec::new(Matrix::zeros(dim), vec![T::zero(); dim]))
        .expect("zero matrix is a valid quadratic");
    p.min_value = Some(T::zero());
    p.minimizer = Some(vec![T::zero(); dim]);
    p
}

/// Max over coordinates of `|central difference − ∇f(point)|` with step `eps`.
pub fn check_gradient<T: Scalar>(problem: &SmoothProblem<T>, point: &[T], eps: T) -> Result<T, ObjectiveError> {
    if point.len() != problem.dim() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: problem.dim(),
            got: point.len(),
        });
    }
    if !(eps > T::zero()) || point.iter().any(|v| !v.is_finite()) {
        return Err(ObjectiveError::InvalidArgument(
            "eps must be positive and the point finite".into(),
        ));
    }
    let grad = problem.gradient(point);
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(ObjectiveError::NonFiniteValue);
    }
    let mut probe = point.to_vec();
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for i in 0..point.len() {
        probe[i] = point[i] + eps;
        let up = problem.value(&probe);
        probe[i] = point[i] - eps;
        let down = problem.value(&probe);
        probe[i] = point[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(ObjectiveError::NonFiniteValue);
        }
        worst = worst.max(((up - down) / (two * eps) - grad[i]).abs());
    }
    Ok(worst)
}

/// `∇²f(point) · direction`, analytic when available and otherwise a central
/// difference of gradients with `ε = √(machine ε) (1 + ‖point‖) / ‖direction‖`.
pub fn hvp_or_fd<T: Scalar>(
    problem: &SmoothProblem<T>,
    point: &[T],
    direction: &[T],
) -> Result<Vec<T>, ObjectiveError> {
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(ObjectiveError::NonFiniteValue);
    }
    if let Some(h) = problem.hvp(point, direction) {
        return if h.iter().all(|v| v.is_finite()) {
            Ok(h)
        } else {
            Err(ObjectiveError::NonFiniteValue)
        };
    }
    let dnorm = norm(direction);
    let tiny = T::lit(1e-30);
    if dnorm <= tiny {
        return Ok(vec![T::zero(); problem.dim()]);
    }
    let eps = T::epsilon().sqrt() * (T::one() + norm(point)) / dnorm.max(tiny);
    let plus: Vec<T> = point.iter().zip(direction).map(|(&p, &d)| p + eps * d).collect();
    let minus: Vec<T> = point.iter().zip(direction).map(|(&p, &d)| p - eps * d).collect();
    let gp = problem.gradient(&plus);
    let gm = problem.gradient(&minus);
    let two_eps = T::lit(2.0) * eps;
    let out: Vec<T> = gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / two_eps).collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(ObjectiveError::NonFiniteValue)
    }
}
