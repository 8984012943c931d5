use crate::linalg::{dist, extrapolate_into, gradient_step_into, norm};
use crate::objective::SmoothProblem;
use crate::prox::{forward_backward_map, CompositeProblem, ProxFriendly};
use crate::Scalar;

use super::{RavineSeed, Record, Scheme, SolverConfig, SolverError, Trace, DIVERGENCE_NORM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicitVariant {
    /// Coefficient `1 − α/k`, prox step `s`.
    SemiImplicit,
    /// Coefficient `k/(k + α)`, prox step `s/(1 + α/k)`.
    FullImplicit,
}

impl ImplicitVariant {
    /// Extrapolation coefficient at iteration `k`.
    pub fn coefficient<T: Scalar>(self, k: usize, alpha: T) -> T {
        match self {
            ImplicitVariant::SemiImplicit => Coefficient::Vanishing(alpha).at(k),
            ImplicitVariant::FullImplicit => Coefficient::Implicit(alpha).at(k),
        }
    }

    /// Proximal step at iteration `k`.
    pub fn prox_step<T: Scalar>(self, k: usize, alpha: T, s: T) -> T {
        match self {
            ImplicitVariant::SemiImplicit => s,
            ImplicitVariant::FullImplicit => s / (T::one() + alpha / T::index(k)),
        }
    }
}

/// `(q, σ)` with `q = (1 − √(μs))/(1 + √(μs))` and `σ = s/(1 + √(μs))`.
pub fn sc_parameters<T: Scalar>(mu: T, s: T) -> (T, T) {
    let r = (mu * s).sqrt();
    ((T::one() - r) / (T::one() + r), s / (T::one() + r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScVariant {
    Prox,
    Nesterov,
    Ravine,
}

#[derive(Debug, Clone, Copy)]
enum Coefficient<T> {
    /// `1 − α/k`
    Vanishing(T),
    /// `k/(k + α)`
    Implicit(T),
    Constant(T),
}

impl<T: Scalar> Coefficient<T> {
    fn at(self, k: usize) -> T {
        match self {
            Coefficient::Vanishing(a) => T::one() - a / T::index(k),
            Coefficient::Implicit(a) => T::index(k) / (T::index(k) + a),
            Coefficient::Constant(q) => q,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Landing<T> {
    /// `prox_{σg}(y − σ∇f(y))`, a plain gradient step when `g ≡ 0`.
    ForwardBackward(T),
    /// Resolvent of `f` (when `g ≡ 0`) or prox of `g` (when `f ≡ 0`) with step
    /// `σ`, or `σ/(1 + α/k)` when `shrink = Some(α)`.
    Implicit { step: T, shrink: Option<T> },
}

struct Recorder<'a, T> {
    problem: &'a CompositeProblem<T>,
    store: bool,
    allow_infinite_value: bool,
    records: Vec<Record<T>>,
}

impl<'a, T: Scalar> Recorder<'a, T> {
    fn new(problem: &'a CompositeProblem<T>, cfg: &SolverConfig<T>) -> Self {
        Self {
            problem,
            store: cfg.store_iterates,
            allow_infinite_value: matches!(problem.nonsmooth, ProxFriendly::Box { .. }),
            records: Vec::with_capacity(cfg.max_iter + 1),
        }
    }

    fn push(
        &mut self,
        k: usize,
        main: &[T],
        aux: &[T],
        grad_norm: T,
        aux_grad_norm: T,
        step_norm: T,
    ) -> Result<(), SolverError> {
        let limit = T::lit(DIVERGENCE_NORM);
        for v in [norm(main), norm(aux), grad_norm, aux_grad_norm, step_norm] {
            if !v.is_finite() || v > limit {
                return Err(SolverError::Diverged { k, norm: v.as_f64() });
            }
        }
        let value = self.problem.value(main);
        let aux_value = self.problem.value(aux);
        for v in [value, aux_value] {
            let bad = v.is_nan() || (v.is_infinite() && !(self.allow_infinite_value && v > T::zero()));
            if bad {
                return Err(SolverError::Diverged { k, norm: v.as_f64() });
            }
        }
        let (main, aux) = if self.store {
            (main.to_vec(), aux.to_vec())
        } else {
            (Vec::new(), Vec::new())
        };
        self.records.push(Record {
            k,
            main,
            aux,
            value,
            aux_value,
            grad_norm,
            aux_grad_norm,
            step_norm,
        });
        Ok(())
    }

    fn finish(
        self,
        scheme: Scheme,
        cfg: &SolverConfig<T>,
        f_star: Option<T>,
        final_main: Vec<T>,
        final_aux: Vec<T>,
    ) -> Trace<T> {
        Trace {
            scheme,
            alpha: cfg.alpha,
            step: cfg.step,
            f_star,
            records: self.records,
            final_main,
            final_aux,
            energy: Vec::new(),
        }
    }
}

fn is_zero_g<T>(problem: &CompositeProblem<T>) -> bool {
    matches!(problem.nonsmooth, ProxFriendly::Zero)
}

/// `‖T_s(point)‖`; reuses `grad = ∇f(point)` when `g ≡ 0`.
fn residual_norm<T: Scalar>(problem: &CompositeProblem<T>, s: T, point: &[T], grad: Option<&[T]>) -> T {
    if is_zero_g(problem) {
        match grad {
            Some(g) => norm(g),
            None => norm(&problem.smooth.gradient(point)),
        }
    } else {
        norm(&forward_backward_map(problem, s, point))
    }
}

/// Applies the landing map at `y`; returns whether `grad` now holds `∇f(y)`.
fn land<T: Scalar>(
    problem: &CompositeProblem<T>,
    landing: Landing<T>,
    k: usize,
    y: &[T],
    grad: &mut [T],
    out: &mut [T],
) -> Result<bool, SolverError> {
    match landing {
        Landing::ForwardBackward(step) => {
            problem.prox_gradient_step_into(step, y, grad, out);
            Ok(true)
        }
        Landing::Implicit { step, shrink } => {
            let step = match shrink {
                Some(a) => step / (T::one() + a / T::index(k)),
                None => step,
            };
            let z = if is_zero_g(problem) {
                problem
                    .smooth
                    .resolvent(step, y)
                    .ok_or_else(|| SolverError::ProxUnavailable("f is not a quadratic".into()))?
            } else {
                problem.nonsmooth.prox(step, y)
            };
            out.copy_from_slice(&z);
            Ok(false)
        }
    }
}

struct Plan<T> {
    scheme: Scheme,
    coefficient: Coefficient<T>,
    landing: Landing<T>,
    beta: Option<T>,
}

/// Extrapolate, then land: `y_k = x_k + c_k(x_k − x_{k−1})`, `x_{k+1} = L(y_k)`.
fn nesterov_loop<T: Scalar>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    plan: Plan<T>,
    f_star: Option<T>,
) -> Result<Trace<T>, SolverError> {
    let n = problem.dim();
    let s = cfg.step;
    let zero_g = is_zero_g(problem);
    let mut x_prev = cfg.x_init.clone();
    let mut x = cfg.x_init.clone();
    let mut y = vec![T::zero(); n];
    let mut x_next = vec![T::zero(); n];
    let mut grad_x = vec![T::zero(); n];
    let mut grad_x_prev = problem.smooth.gradient(&cfg.x_init);
    let mut grad_y = vec![T::zero(); n];
    let mut rec = Recorder::new(problem, cfg);
    let last = cfg.k_start + cfg.max_iter;

    for k in cfg.k_start..=last {
        problem.smooth.gradient_into(&x, &mut grad_x);
        extrapolate_into(&x, &x_prev, plan.coefficient.at(k), &mut y);
        if let Some(beta) = plan.beta.filter(|b| *b != T::zero()) {
            let b = beta * s.sqrt();
            let bk = b / T::index(k);
            for ((yi, &g), &gp) in y.iter_mut().zip(&grad_x).zip(&grad_x_prev) {
                *yi = *yi - b * (g - gp) - bk * gp;
            }
        }
        let grad_norm = if zero_g {
            norm(&grad_x)
        } else {
            residual_norm(problem, s, &x, None)
        };
        let step_norm = dist(&x, &x_prev);
        let have_grad_y = if k < last {
            land(problem, plan.landing, k, &y, &mut grad_y, &mut x_next)?
        } else {
            false
        };
        let aux_grad_norm = residual_norm(problem, s, &y, have_grad_y.then_some(grad_y.as_slice()));
        rec.push(k, &x, &y, grad_norm, aux_grad_norm, step_norm)?;
        if k == last {
            break;
        }
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut x_next);
        std::mem::swap(&mut grad_x_prev, &mut grad_x);
    }
    Ok(rec.finish(plan.scheme, cfg, f_star, x, y))
}

/// Land, then extrapolate: `w_k = L(y_k)`, `y_{k+1} = w_k + c_{k+1}(w_k − w_{k−1})`.
fn ravine_loop<T: Scalar>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    plan: Plan<T>,
    f_star: Option<T>,
) -> Result<Trace<T>, SolverError> {
    let n = problem.dim();
    let s = cfg.step;
    let mut y_prev = cfg.x_init.clone();
    let mut y = cfg.x_init.clone();
    let mut w = vec![T::zero(); n];
    let mut w_prev = vec![T::zero(); n];
    let mut y_next = vec![T::zero(); n];
    let mut grad_y = vec![T::zero(); n];
    let mut rec = Recorder::new(problem, cfg);
    let last = cfg.k_start + cfg.max_iter;

    for k in cfg.k_start..=last {
        let have_grad = land(problem, plan.landing, k, &y, &mut grad_y, &mut w)?;
        let grad_norm = residual_norm(problem, s, &y, have_grad.then_some(grad_y.as_slice()));
        let aux_grad_norm = residual_norm(problem, s, &w, None);
        rec.push(k, &y, &w, grad_norm, aux_grad_norm, dist(&y, &y_prev))?;
        if k == last {
            break;
        }
        if k == cfg.k_start {
            match cfg.ravine_seed {
                RavineSeed::ZeroVelocity => w_prev.copy_from_slice(&w),
                RavineSeed::FromNesterov => w_prev.copy_from_slice(&cfg.x_init),
            }
        }
        extrapolate_into(&w, &w_prev, plan.coefficient.at(k + 1), &mut y_next);
        std::mem::swap(&mut y_prev, &mut y);
        std::mem::swap(&mut y, &mut y_next);
        std::mem::swap(&mut w_prev, &mut w);
    }
    Ok(rec.finish(plan.scheme, cfg, f_star, y, w))
}

/// `x_{k+1} = x_k + m(x_k − x_{k−1}) − s∇f(x_k)`.
fn plain_loop<T: Scalar>(
    problem: &SmoothProblem<T>,
    cfg: &SolverConfig<T>,
    scheme: Scheme,
    momentum: T,
) -> Result<Trace<T>, SolverError> {
    let composite = CompositeProblem::from(problem.clone());
    let n = problem.dim();
    let s = cfg.step;
    let mut x_prev = cfg.x_init.clone();
    let mut x = cfg.x_init.clone();
    let mut y = vec![T::zero(); n];
    let mut x_next = vec![T::zero(); n];
    let mut grad_x = vec![T::zero(); n];
    let mut rec = Recorder::new(&composite, cfg);
    let last = cfg.k_start + cfg.max_iter;

    for k in cfg.k_start..=last {
        problem.gradient_into(&x, &mut grad_x);
        let grad_norm = norm(&grad_x);
        let aux_grad_norm = if momentum == T::zero() {
            y.copy_from_slice(&x);
            grad_norm
        } else {
            extrapolate_into(&x, &x_prev, momentum, &mut y);
            norm(&problem.gradient(&y))
        };
        rec.push(k, &x, &y, grad_norm, aux_grad_norm, dist(&x, &x_prev))?;
        if k == last {
            break;
        }
        gradient_step_into(&y, &grad_x, s, &mut x_next);
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut x_next);
    }
    Ok(rec.finish(scheme, cfg, problem.min_value(), x, y))
}

fn smooth_composite<T: Scalar>(problem: &SmoothProblem<T>) -> CompositeProblem<T> {
    CompositeProblem::from(problem.clone())
}

/// Nesterov accelerated gradient with vanishing damping `1 − α/k`.
pub fn run_nag<T: Scalar>(problem: &SmoothProblem<T>, cfg: &SolverConfig<T>) -> Result<Trace<T>, SolverError> {
    let composite = smooth_composite(problem);
    cfg.validate(&composite)?;
    let plan = Plan {
        scheme: Scheme::Nag,
        coefficient: Coefficient::Vanishing(cfg.alpha),
        landing: Landing::ForwardBackward(cfg.step),
        beta: None,
    };
    nesterov_loop(&composite, cfg, plan, problem.min_value())
}

/// Ravine accelerated gradient: the `y`-sequence of NAG driven directly.
pub fn run_rag<T: Scalar>(problem: &SmoothProblem<T>, cfg: &SolverConfig<T>) -> Result<Trace<T>, SolverError> {
    let composite = smooth_composite(problem);
    cfg.validate(&composite)?;
    let plan = Plan {
        scheme: Scheme::Rag,
        coefficient: Coefficient::Vanishing(cfg.alpha),
        landing: Landing::ForwardBackward(cfg.step),
        beta: None,
    };
    ravine_loop(&composite, cfg, plan, problem.min_value())
}

/// NAG with the Hessian-driven correction
/// `− β√s(∇f(x_k) − ∇f(x_{k−1})) − (β√s/k)∇f(x_{k−1})` in the extrapolation.
pub fn run_igahd<T: Scalar>(problem: &SmoothProblem<T>, cfg: &SolverConfig<T>) -> Result<Trace<T>, SolverError> {
    let composite = smooth_composite(problem);
    cfg.validate(&composite)?;
    let upper = T::lit(2.0) * cfg.step.sqrt();
    if !cfg.force && !(cfg.beta >= T::zero() && cfg.beta < upper) {
        return Err(SolverError::BetaOutOfRange {
            beta: cfg.beta.as_f64(),
            upper: upper.as_f64(),
        });
    }
    let plan = Plan {
        scheme: Scheme::Igahd,
        coefficient: Coefficient::Vanishing(cfg.alpha),
        landing: Landing::ForwardBackward(cfg.step),
        beta: Some(cfg.beta),
    };
    nesterov_loop(&composite, cfg, plan, problem.min_value())
}

/// Inertial proximal algorithm `x_{k+1} = prox_{σ_k f}(x_k + c_k(x_k − x_{k−1}))`.
///
/// The proximal map is the resolvent of `f` when `g ≡ 0` (quadratics only), or
/// the prox of `g` when `f ≡ 0`.
pub fn run_inertial_prox<T: Scalar>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    variant: ImplicitVariant,
) -> Result<Trace<T>, SolverError> {
    cfg.validate(problem)?;
    check_implicit(problem)?;
    let (scheme, coefficient, shrink) = match variant {
        ImplicitVariant::SemiImplicit => (Scheme::Iprox, Coefficient::Vanishing(cfg.alpha), None),
        ImplicitVariant::FullImplicit => (Scheme::IproxFull, Coefficient::Implicit(cfg.alpha), Some(cfg.alpha)),
    };
    let plan = Plan {
        scheme,
        coefficient,
        landing: Landing::Implicit { step: cfg.step, shrink },
        beta: None,
    };
    nesterov_loop(problem, cfg, plan, problem.theta_min)
}

fn check_implicit<T: Scalar>(problem: &CompositeProblem<T>) -> Result<(), SolverError> {
    if is_zero_g(problem) {
        if problem.smooth.quadratic().is_none() {
            return Err(SolverError::ProxUnavailable(
                "the resolvent of f is only available for quadratics".into(),
            ));
        }
    } else if !problem.smooth.is_identically_zero() {
        return Err(SolverError::ProxUnavailable(
            "the proximal map of f + g has no closed form".into(),
        ));
    }
    Ok(())
}

/// Ravine accelerated proximal gradient: `w_k = prox_{sg}(y_k − s∇f(y_k))`,
/// `y_{k+1} = w_k + (1 − α/(k+1))(w_k − w_{k−1})`.
pub fn run_rapg<T: Scalar>(problem: &CompositeProblem<T>, cfg: &SolverConfig<T>) -> Result<Trace<T>, SolverError> {
    cfg.validate(problem)?;
    let plan = Plan {
        scheme: Scheme::Rapg,
        coefficient: Coefficient::Vanishing(cfg.alpha),
        landing: Landing::ForwardBackward(cfg.step),
        beta: None,
    };
    ravine_loop(problem, cfg, plan, problem.theta_min)
}

/// Inertial proximal gradient in Nesterov ordering:
/// `x_{k+1} = prox_{sg}(y_k − s∇f(y_k))`.
pub fn run_fista_like<T: Scalar>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<Trace<T>, SolverError> {
    cfg.validate(problem)?;
    let plan = Plan {
        scheme: Scheme::Fista,
        coefficient: Coefficient::Vanishing(cfg.alpha),
        landing: Landing::ForwardBackward(cfg.step),
        beta: None,
    };
    nesterov_loop(problem, cfg, plan, problem.theta_min)
}

/// Strongly convex schemes with constant coefficient
/// `q = (1 − √(μs))/(1 + √(μs))` and step `s/(1 + √(μs))`.
pub fn run_sc<T: Scalar>(
    problem: &SmoothProblem<T>,
    cfg: &SolverConfig<T>,
    variant: ScVariant,
) -> Result<Trace<T>, SolverError> {
    if !(cfg.mu > T::zero()) || !cfg.mu.is_finite() {
        return Err(SolverError::MuRequired(cfg.mu.as_f64()));
    }
    let composite = smooth_composite(problem);
    cfg.validate(&composite)?;
    let (q, step) = sc_parameters(cfg.mu, cfg.step);
    let f_star = problem.min_value();
    match variant {
        ScVariant::Prox => {
            check_implicit(&composite)?;
            let plan = Plan {
                scheme: Scheme::ScProx,
                coefficient: Coefficient::Constant(q),
                landing: Landing::Implicit { step, shrink: None },
                beta: None,
            };
            nesterov_loop(&composite, cfg, plan, f_star)
        }
        ScVariant::Nesterov => {
            let plan = Plan {
                scheme: Scheme::ScNesterov,
                coefficient: Coefficient::Constant(q),
                landing: Landing::ForwardBackward(step),
                beta: None,
            };
            nesterov_loop(&composite, cfg, plan, f_star)
        }
        ScVariant::Ravine => {
            let plan = Plan {
                scheme: Scheme::ScRavine,
                coefficient: Coefficient::Constant(q),
                landing: Landing::ForwardBackward(step),
                beta: None,
            };
            ravine_loop(&composite, cfg, plan, f_star)
        }
    }
}

/// Gradient descent `x_{k+1} = x_k − s∇f(x_k)`.
pub fn run_gd<T: Scalar>(problem: &SmoothProblem<T>, cfg: &SolverConfig<T>) -> Result<Trace<T>, SolverError> {
    cfg.validate(&smooth_composite(problem))?;
    plain_loop(problem, cfg, Scheme::Gd, T::zero())
}

/// Heavy ball `x_{k+1} = x_k + m(x_k − x_{k−1}) − s∇f(x_k)` with `m ∈ [0, 1)`.
pub fn run_heavy_ball<T: Scalar>(
    problem: &SmoothProblem<T>,
    cfg: &SolverConfig<T>,
    momentum: T,
) -> Result<Trace<T>, SolverError> {
    cfg.validate(&smooth_composite(problem))?;
    if !(momentum >= T::zero() && momentum < T::one()) {
        return Err(SolverError::InvalidConfig(format!(
            "heavy-ball momentum must lie in [0, 1), got {momentum}"
        )));
    }
    plain_loop(problem, cfg, Scheme::Hb, momentum)
}

/// Whether `scheme` can run on `problem` at all: smooth-only schemes reject a
/// nonzero `g`, and the inertial proximal schemes need a closed-form map.
pub fn check_scheme<T: Scalar>(scheme: Scheme, problem: &CompositeProblem<T>) -> Result<(), SolverError> {
    match scheme {
        Scheme::Iprox | Scheme::IproxFull => check_implicit(problem),
        Scheme::Rapg | Scheme::Fista => Ok(()),
        _ if problem.nonsmooth.is_zero() => Ok(()),
        _ => Err(SolverError::InvalidConfig(format!(
            "scheme {scheme} handles smooth problems only; use fista or rapg with a nonsmooth g"
        ))),
    }
}

/// Runs `scheme` on `problem` after [`check_scheme`].
/// Uses `cfg.momentum` for heavy ball.
pub fn run_scheme<T: Scalar>(
    scheme: Scheme,
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<Trace<T>, SolverError> {
    check_scheme(scheme, problem)?;
    let f = &problem.smooth;
    match scheme {
        Scheme::Nag => run_nag(f, cfg),
        Scheme::Rag => run_rag(f, cfg),
        Scheme::Igahd => run_igahd(f, cfg),
        Scheme::Iprox => run_inertial_prox(problem, cfg, ImplicitVariant::SemiImplicit),
        Scheme::IproxFull => run_inertial_prox(problem, cfg, ImplicitVariant::FullImplicit),
        Scheme::Rapg => run_rapg(problem, cfg),
        Scheme::Fista => run_fista_like(problem, cfg),
        Scheme::ScProx => run_sc(f, cfg, ScVariant::Prox),
        Scheme::ScNesterov => run_sc(f, cfg, ScVariant::Nesterov),
        Scheme::ScRavine => run_sc(f, cfg, ScVariant::Ravine),
        Scheme::Gd => run_gd(f, cfg),
        Scheme::Hb => run_heavy_ball(f, cfg, cfg.momentum),
    }
}
