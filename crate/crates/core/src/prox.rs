//! Proximal operators, composite objectives `θ = f + g`, and the prox-gradient
//! operator `T_s(y) = (y − prox_{sg}(y − s∇f(y))) / s`.

use thiserror::Error;

use crate::linalg::{dot, norm, Matrix};
use crate::objective::{make_quadratic, ObjectiveError, QuadraticSpec, SmoothProblem};
use crate::random;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxError {
    #[error("box is empty at coordinate {index}: lo = {lo} > hi = {hi}")]
    EmptyBox { index: usize, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// A convex, lower semicontinuous `g` with a closed-form proximal map.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxFriendly<T> {
    /// `g ≡ 0`; the proximal map is the identity.
    Zero,
    /// `g = λ‖x‖₁`; the proximal map is soft thresholding at `sλ`.
    L1 { lambda: T },
    /// Indicator of `[lo, hi]`; the proximal map is the coordinatewise clamp.
    Box { lo: Vec<T>, hi: Vec<T> },
}

pub fn prox_zero<T>() -> ProxFriendly<T> {
    ProxFriendly::Zero
}

pub fn prox_l1<T: Scalar>(lambda: T) -> Result<ProxFriendly<T>, ProxError> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(ProxError::InvalidArgument(format!(
            "l1 weight must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(ProxFriendly::L1 { lambda })
}

pub fn prox_box<T: Scalar>(lo: Vec<T>, hi: Vec<T>) -> Result<ProxFriendly<T>, ProxError> {
    if lo.len() != hi.len() {
        return Err(ProxError::InvalidArgument(format!(
            "box bounds have different lengths ({} vs {})",
            lo.len(),
            hi.len()
        )));
    }
    if let Some(index) = lo.iter().zip(&hi).position(|(l, h)| !(l <= h)) {
        return Err(ProxError::EmptyBox {
            index,
            lo: lo[index].as_f64(),
            hi: hi[index].as_f64(),
        });
    }
    Ok(ProxFriendly::Box { lo, hi })
}

#[inline]
fn soft_threshold<T: Scalar>(v: T, t: T) -> T {
    v.signum() * (v.abs() - t).max(T::zero())
}

impl<T: Scalar> ProxFriendly<T> {
    pub fn is_zero(&self) -> bool {
        match self {
            ProxFriendly::Zero => true,
            ProxFriendly::L1 { lambda } => *lambda == T::zero(),
            ProxFriendly::Box { .. } => false,
        }
    }

    /// `g(x)`, `+∞` outside the domain of an indicator.
    pub fn value(&self, x: &[T]) -> T {
        match self {
            ProxFriendly::Zero => T::zero(),
            ProxFriendly::L1 { lambda } => *lambda * x.iter().fold(T::zero(), |a, v| a + v.abs()),
            ProxFriendly::Box { lo, hi } => {
                if x.iter().zip(lo).zip(hi).all(|((v, l), h)| v >= l && v <= h) {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
        }
    }

    pub fn prox_into(&self, step: T, y: &[T], out: &mut [T]) {
        match self {
            ProxFriendly::Zero => out.copy_from_slice(y),
            ProxFriendly::L1 { lambda } => {
                let t = step * *lambda;
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = soft_threshold(v, t);
                }
            }
            ProxFriendly::Box { lo, hi } => {
                for (((o, &v), &l), &h) in out.iter_mut().zip(y).zip(lo).zip(hi) {
                    *o = v.max(l).min(h);
                }
            }
        }
    }

    /// `prox_{s g}(y) = argmin_z g(z) + ‖z − y‖² / (2s)`.
    pub fn prox(&self, step: T, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); y.len()];
        self.prox_into(step, y, &mut out);
        out
    }
}

/// `θ = f + g` with `f` smooth and `g` prox-friendly.
#[derive(Clone)]
pub struct CompositeProblem<T> {
    pub smooth: SmoothProblem<T>,
    pub nonsmooth: ProxFriendly<T>,
    /// `min θ` when known.
    pub theta_min: Option<T>,
}

impl<T: Scalar> std::fmt::Debug for CompositeProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("smooth", &self.smooth)
            .field("nonsmooth", &self.nonsmooth)
            .field("theta_min", &self.theta_min)
            .finish()
    }
}

impl<T: Scalar> CompositeProblem<T> {
    /// Pairs `f` with `g`; inherits `min f` as `min θ` when `g ≡ 0`.
    pub fn new(smooth: SmoothProblem<T>, nonsmooth: ProxFriendly<T>) -> Result<Self, ProxError> {
        if let ProxFriendly::Box { lo, .. } = &nonsmooth {
            if lo.len() != smooth.dim() {
                return Err(ProxError::InvalidArgument(format!(
                    "box has dimension {} but the smooth part has dimension {}",
                    lo.len(),
                    smooth.dim()
                )));
            }
        }
        let theta_min = if nonsmooth.is_zero() { smooth.min_value() } else { None };
        Ok(Self {
            smooth,
            nonsmooth,
            theta_min,
        })
    }

    pub fn with_theta_min(mut self, theta_min: T) -> Self {
        self.theta_min = Some(theta_min);
        self
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn lipschitz(&self) -> T {
        self.smooth.lipschitz()
    }

    /// `θ(x) = f(x) + g(x)`; `+∞` when `x` lies outside `dom g`.
    pub fn value(&self, x: &[T]) -> T {
        if matches!(self.nonsmooth, ProxFriendly::Zero) {
            return self.smooth.value(x);
        }
        let g = self.nonsmooth.value(x);
        if g.is_infinite() {
            return g;
        }
        self.smooth.value(x) + g
    }

    /// `prox_{sg}(y − s∇f(y))`, written into `out`; `grad` is scratch space
    /// that receives `∇f(y)`.
    pub fn prox_gradient_step_into(&self, step: T, y: &[T], grad: &mut [T], out: &mut [T]) {
        self.smooth.gradient_into(y, grad);
        match &self.nonsmooth {
            ProxFriendly::Zero => {
                for ((o, &yi), &gi) in out.iter_mut().zip(y).zip(grad.iter()) {
                    *o = yi - step * gi;
                }
            }
            g => {
                let forward: Vec<T> = y.iter().zip(grad.iter()).map(|(&yi, &gi)| yi - step * gi).collect();
                g.prox_into(step, &forward, out);
            }
        }
    }

    pub fn prox_gradient_step(&self, step: T, y: &[T]) -> Vec<T> {
        let mut grad = vec![T::zero(); self.dim()];
        let mut out = vec![T::zero(); self.dim()];
        self.prox_gradient_step_into(step, y, &mut grad, &mut out);
        out
    }
}

impl<T: Scalar> From<SmoothProblem<T>> for CompositeProblem<T> {
    /// `θ = f` with `g ≡ 0`.
    fn from(smooth: SmoothProblem<T>) -> Self {
        let theta_min = smooth.min_value();
        Self {
            smooth,
            nonsmooth: ProxFriendly::Zero,
            theta_min,
        }
    }
}

/// `T_s(y) = (y − prox_{sg}(y − s∇f(y))) / s`. Returns `∇f(y)` exactly when `g ≡ 0`.
pub fn forward_backward_map<T: Scalar>(problem: &CompositeProblem<T>, step: T, y: &[T]) -> Vec<T> {
    if matches!(problem.nonsmooth, ProxFriendly::Zero) {
        return problem.smooth.gradient(y);
    }
    let w = problem.prox_gradient_step(step, y);
    y.iter().zip(&w).map(|(&yi, &wi)| (yi - wi) / step).collect()
}

/// `θ(x) + ⟨T_s(y), y − x⟩ − (s/2)‖T_s(y)‖² − θ(y − sT_s(y))`, which is `≥ 0`
/// for every `x, y` when `sL ≤ 1`.
pub fn composite_descent_gap<T: Scalar>(problem: &CompositeProblem<T>, step: T, x: &[T], y: &[T]) -> T {
    let t = forward_backward_map(problem, step, y);
    let landing = problem.prox_gradient_step(step, y);
    let diff: Vec<T> = y.iter().zip(x).map(|(&a, &b)| a - b).collect();
    let tn = norm(&t);
    problem.value(x) + dot(&t, &diff) - step / T::lit(2.0) * tn * tn - problem.value(&landing)
}

/// `f(x) = ½‖Ax − b‖²` for a row-major design `A` (`m × n`), as a quadratic
/// with matrix `AᵀA`, offset `Aᵀb` and constant `½‖b‖²`.
pub fn least_squares<T: Scalar>(design: &[Vec<T>], target: &[T]) -> Result<SmoothProblem<T>, ProxError> {
    let m = design.len();
    if m == 0 || target.len() != m {
        return Err(ProxError::InvalidArgument(format!(
            "design has {m} rows but target has {} entries",
            target.len()
        )));
    }
    let n = design[0].len();
    if n == 0 || design.iter().any(|r| r.len() != n) {
        return Err(ProxError::InvalidArgument(
            "design rows must share a positive length".into(),
        ));
    }
    let mut gram = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = design.iter().fold(T::zero(), |acc, row| acc + row[i] * row[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let offset: Vec<T> = (0..n)
        .map(|j| {
            design
                .iter()
                .zip(target)
                .fold(T::zero(), |acc, (row, &b)| acc + row[j] * b)
        })
        .collect();
    let shift = T::lit(0.5) * dot(target, target);
    Ok(make_quadratic(QuadraticSpec::new(gram, offset).with_shift(shift))?)
}

/// `½‖Ax − b‖² + λ‖x‖₁`.
pub fn lasso_from_design<T: Scalar>(
    design: &[Vec<T>],
    target: &[T],
    lambda: T,
) -> Result<CompositeProblem<T>, ProxError> {
    CompositeProblem::new(least_squares(design, target)?, prox_l1(lambda)?)
}

/// Parameters of a seeded random lasso instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSpec {
    pub rows: usize,
    pub dim: usize,
    pub lambda: f64,
    /// Smallest eigenvalue of `AᵀA`; the largest is 1 and the rest are log-spaced.
    pub min_eigenvalue: f64,
    /// Number of nonzero entries in the planted coefficient vector.
    pub support: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for LassoSpec {
    fn default() -> Self {
        Self {
            rows: 40,
            dim: 20,
            lambda: 0.01,
            min_eigenvalue: 1e-6,
            support: 5,
            noise: 0.01,
            seed: 20_240_101,
        }
    }
}

/// Design `A = U diag(σ) Vᵀ` with random orthonormal `U`, `V` and `σᵢ²`
/// log-spaced in `[min_eigenvalue, 1]`; target `b = A x_true + noise` for a
/// sparse planted `x_true`.
pub fn random_lasso<T: Scalar>(spec: &LassoSpec) -> Result<CompositeProblem<T>, ProxError> {
    let LassoSpec {
        rows,
        dim,
        lambda,
        min_eigenvalue,
        support,
        noise,
        seed,
    } = *spec;
    if dim == 0 || rows < dim || support > dim || !(min_eigenvalue > 0.0 && min_eigenvalue <= 1.0) {
        return Err(ProxError::InvalidArgument(format!(
            "lasso needs rows >= dim > 0, support <= dim and 0 < min_eigenvalue <= 1 \
             (rows={rows}, dim={dim}, support={support}, min_eigenvalue={min_eigenvalue})"
        )));
    }
    let mut rng = random::seeded(seed);
    let u = random::orthonormal_columns(&mut rng, rows, dim);
    let v = random::orthonormal_columns(&mut rng, dim, dim);
    let sigma: Vec<f64> = random::log_spaced(1.0, min_eigenvalue, dim)
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let design: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..dim)
                .map(|c| (0..dim).map(|k| u[k][r] * sigma[k] * v[k][c]).sum())
                .collect()
        })
        .collect();
    let signs = random::gaussian_vec(&mut rng, support);
    let mut planted = vec![0.0; dim];
    for (i, s) in signs.iter().enumerate() {
        // spread the support across the coordinates
        planted[(i * dim) / support.max(1)] = s.signum();
    }
    let eps = random::gaussian_vec(&mut rng, rows);
    let target: Vec<T> = design
        .iter()
        .zip(&eps)
        .map(|(row, e)| T::lit(dot(row, &planted) + noise * e))
        .collect();
    let design_t: Vec<Vec<T>> = design
        .into_iter()
        .map(|r| r.into_iter().map(T::lit).collect())
        .collect();
    lasso_from_design(&design_t, &target, T::lit(lambda))
}
