//! Fixed-step RK4 integration of the inertial dynamics, and the time
//! alignment that compares iterates with their low- and high-resolution ODEs.

use thiserror::Error;

use crate::linalg::{dist, norm};
use crate::objective::{hvp_or_fd, ObjectiveError, SmoothProblem};
use crate::solvers::{run_nag, run_rag, SolverConfig, SolverError, Trace, DIVERGENCE_NORM};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid ODE setup: {0}")]
    InvalidSpec(String),
    #[error("trajectory diverged at t = {t}")]
    Diverged { t: f64 },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeKind {
    /// `ẍ + γẋ + ∇f(x) = 0`
    Hbf,
    /// `ẍ + (α/t)ẋ + ∇f(x) = 0`
    Avd,
    /// `ẍ + (α/t)ẋ + β∇²f(x)ẋ + b(t)∇f(x) = 0`
    DinAvd,
    /// `ẍ + (α/t)ẋ + ∇f(x + (γ + β/t)ẋ) = 0`
    Isihd,
    /// `ẍ + (α/t)ẋ + √s∇²f(x)ẋ + (1 + α√s/(2t))∇f(x) = 0`
    Highres,
    /// `ẍ + 2√μẋ + ∇f(x) = 0`
    HbfSc,
}

impl OdeKind {
    pub fn name(self) -> &'static str {
        match self {
            OdeKind::Hbf => "hbf",
            OdeKind::Avd => "avd",
            OdeKind::DinAvd => "din_avd",
            OdeKind::Isihd => "isihd",
            OdeKind::Highres => "highres",
            OdeKind::HbfSc => "hbf_sc",
        }
    }

    /// Whether the dynamic carries an `α/t` term and needs `t0 > 0`.
    pub fn singular_at_zero(self) -> bool {
        matches!(self, OdeKind::Avd | OdeKind::DinAvd | OdeKind::Isihd | OdeKind::Highres)
    }
}

/// The `b(t)` factor of DIN-AVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BKind {
    #[default]
    One,
    OnePlusBetaOverT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSpec<T> {
    pub kind: OdeKind,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub s: T,
    pub mu: T,
    pub b_kind: BKind,
    pub t0: T,
    pub x0: Vec<T>,
    pub v0: Vec<T>,
}

impl<T: Scalar> OdeSpec<T> {
    /// Spec with zero parameters, `t0 = 1` and `v0 = 0`.
    pub fn new(kind: OdeKind, x0: Vec<T>) -> Self {
        let n = x0.len();
        Self {
            kind,
            alpha: T::zero(),
            beta: T::zero(),
            gamma: T::zero(),
            s: T::zero(),
            mu: T::zero(),
            b_kind: BKind::One,
            t0: T::one(),
            x0,
            v0: vec![T::zero(); n],
        }
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_s(mut self, s: T) -> Self {
        self.s = s;
        self
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_b_kind(mut self, b_kind: BKind) -> Self {
        self.b_kind = b_kind;
        self
    }

    pub fn with_t0(mut self, t0: T) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_v0(mut self, v0: Vec<T>) -> Self {
        self.v0 = v0;
        self
    }

    fn validate(&self, dim: usize) -> Result<(), DynamicsError> {
        if self.x0.len() != dim || self.v0.len() != dim {
            return Err(DynamicsError::InvalidSpec(format!(
                "x0/v0 have dimensions {}/{}, problem has {dim}",
                self.x0.len(),
                self.v0.len()
            )));
        }
        let params = [self.alpha, self.beta, self.gamma, self.s, self.mu, self.t0];
        if params.iter().any(|p| !p.is_finite()) {
            return Err(DynamicsError::InvalidSpec("parameters must be finite".into()));
        }
        if self.beta < T::zero() || self.gamma < T::zero() || self.s < T::zero() || self.mu < T::zero() {
            return Err(DynamicsError::InvalidSpec("beta, gamma, s and mu must be >= 0".into()));
        }
        if self.kind.singular_at_zero() && !(self.t0 > T::zero()) {
            return Err(DynamicsError::InvalidSpec(format!(
                "{} has an alpha/t term and needs t0 > 0, got {}",
                self.kind.name(),
                self.t0
            )));
        }
        Ok(())
    }

    /// `ẍ` at `(t, x, v)`.
    pub fn acceleration(&self, problem: &SmoothProblem<T>, t: T, x: &[T], v: &[T]) -> Result<Vec<T>, DynamicsError> {
        let one = T::one();
        let viscous = |c: T, g: &[T]| -> Vec<T> { v.iter().zip(g).map(|(&vi, &gi)| -c * vi - gi).collect() };
        let out = match self.kind {
            OdeKind::Hbf => viscous(self.gamma, &problem.gradient(x)),
            OdeKind::HbfSc => viscous(T::lit(2.0) * self.mu.sqrt(), &problem.gradient(x)),
            OdeKind::Avd => viscous(self.alpha / t, &problem.gradient(x)),
            OdeKind::DinAvd => {
                let b = match self.b_kind {
                    BKind::One => one,
                    BKind::OnePlusBetaOverT => one + self.beta / t,
                };
                let g = problem.gradient(x);
                let hv = hvp_or_fd(problem, x, v)?;
                let c = self.alpha / t;
                v.iter()
                    .zip(&g)
                    .zip(&hv)
                    .map(|((&vi, &gi), &hi)| -c * vi - self.beta * hi - b * gi)
                    .collect()
            }
            OdeKind::Isihd => {
                let shift = self.gamma + self.beta / t;
                let probe: Vec<T> = x.iter().zip(v).map(|(&xi, &vi)| xi + shift * vi).collect();
                viscous(self.alpha / t, &problem.gradient(&probe))
            }
            OdeKind::Highres => {
                let h = self.s.sqrt();
                let g = problem.gradient(x);
                let hv = hvp_or_fd(problem, x, v)?;
                let c = self.alpha / t;
                let b = one + self.alpha * h / (T::lit(2.0) * t);
                v.iter()
                    .zip(&g)
                    .zip(&hv)
                    .map(|((&vi, &gi), &hi)| -c * vi - h * hi - b * gi)
                    .collect()
            }
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeRun<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub velocities: Vec<Vec<T>>,
    pub objective: Vec<T>,
}

impl<T: Scalar> OdeRun<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `f(x(t)) − f*`.
    pub fn gaps(&self, f_star: T) -> Vec<T> {
        self.objective.iter().map(|&v| v - f_star).collect()
    }

    /// `f(x) + ½‖v‖²`.
    pub fn mechanical_energy(&self) -> Vec<T> {
        let half = T::lit(0.5);
        self.objective
            .iter()
            .zip(&self.velocities)
            .map(|(&f, v)| {
                let n = norm(v);
                f + half * n * n
            })
            .collect()
    }
}

fn axpy<T: Scalar>(x: &[T], c: T, d: &[T]) -> Vec<T> {
    x.iter().zip(d).map(|(&a, &b)| a + c * b).collect()
}

/// Classical RK4 on `(x, v)` with constant step `dt` from `t0` over
/// `⌈(t_end − t0)/dt⌉` steps; every step is sampled.
pub fn integrate<T: Scalar>(
    problem: &SmoothProblem<T>,
    spec: &OdeSpec<T>,
    t_end: T,
    dt: T,
) -> Result<OdeRun<T>, DynamicsError> {
    spec.validate(problem.dim())?;
    let span = t_end - spec.t0;
    if !(span > T::zero()) {
        return Err(DynamicsError::InvalidSpec(format!(
            "t_end = {t_end} must exceed t0 = {}",
            spec.t0
        )));
    }
    if !(dt > T::zero()) || dt > span / T::lit(10.0) {
        return Err(DynamicsError::InvalidSpec(format!(
            "dt = {dt} must be positive and at most (t_end - t0)/10 = {}",
            span / T::lit(10.0)
        )));
    }
    let steps = (span / dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(0);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    let limit = T::lit(DIVERGENCE_NORM);

    let mut run = OdeRun {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        velocities: Vec::with_capacity(steps + 1),
        objective: Vec::with_capacity(steps + 1),
    };
    let mut x = spec.x0.clone();
    let mut v = spec.v0.clone();
    for i in 0..=steps {
        let t = spec.t0 + T::index(i) * dt;
        let f = problem.value(&x);
        if !f.is_finite() || !(norm(&x) <= limit) || !(norm(&v) <= limit) {
            return Err(DynamicsError::Diverged { t: t.as_f64() });
        }
        run.times.push(t);
        run.states.push(x.clone());
        run.velocities.push(v.clone());
        run.objective.push(f);
        if i == steps {
            break;
        }
        let a1 = spec.acceleration(problem, t, &x, &v)?;
        let (x2, v2) = (axpy(&x, half * dt, &v), axpy(&v, half * dt, &a1));
        let a2 = spec.acceleration(problem, t + half * dt, &x2, &v2)?;
        let (x3, v3) = (axpy(&x, half * dt, &v2), axpy(&v, half * dt, &a2));
        let a3 = spec.acceleration(problem, t + half * dt, &x3, &v3)?;
        let (x4, v4) = (axpy(&x, dt, &v3), axpy(&v, dt, &a3));
        let a4 = spec.acceleration(problem, t + dt, &x4, &v4)?;
        for j in 0..x.len() {
            x[j] += dt * sixth * (v[j] + two * v2[j] + two * v3[j] + v4[j]);
            v[j] += dt * sixth * (a1[j] + two * a2[j] + two * a3[j] + a4[j]);
        }
    }
    Ok(run)
}

/// Rule mapping iteration index `k` to ODE time, with `h = √s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// `t_k = kh`
    NagLowres,
    /// `t_k = kh`
    RagLowres,
    /// `t_k = h(k − α/2)`
    NagHighres,
    /// `t_k = h(k + 1 − α/2)`
    RagHighres,
}

impl Alignment {
    pub fn time<T: Scalar>(self, k: usize, alpha: T, s: T) -> T {
        let h = s.sqrt();
        let k = T::index(k);
        let half_alpha = alpha / T::lit(2.0);
        match self {
            Alignment::NagLowres | Alignment::RagLowres => k * h,
            Alignment::NagHighres => h * (k - half_alpha),
            Alignment::RagHighres => h * (k + T::one() - half_alpha),
        }
    }
}

/// Record indices with positive aligned times, and those times.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTimes<T> {
    pub indices: Vec<usize>,
    pub times: Vec<T>,
}

pub fn align_iterates<T: Scalar>(trace: &Trace<T>, alignment: Alignment, s: T) -> AlignedTimes<T> {
    let mut out = AlignedTimes {
        indices: Vec::new(),
        times: Vec::new(),
    };
    for (i, r) in trace.records.iter().enumerate() {
        let t = alignment.time(r.k, trace.alpha, s);
        if t > T::zero() {
            out.indices.push(i);
            out.times.push(t);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTarget {
    Nag,
    Rag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionSetup<T> {
    pub alpha: T,
    pub s: T,
    pub horizon: T,
    pub which: GapTarget,
    pub x_init: Vec<T>,
    /// Iterates are matched to each ODE at the first aligned time `≥ t_match`.
    pub t_match: T,
    /// RK4 substeps per iteration.
    pub substeps: usize,
    pub velocity: VelocityRule,
}

/// Finite difference giving the matched initial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityRule {
    /// `(p_{m+1} − p_{m−1}) / 2h`
    #[default]
    Centered,
    /// `(p_{m+1} − p_m) / h`
    Forward,
}

impl<T: Scalar> ResolutionSetup<T> {
    pub fn new(alpha: T, s: T, horizon: T, which: GapTarget, x_init: Vec<T>) -> Self {
        Self {
            alpha,
            s,
            horizon,
            which,
            x_init,
            t_match: T::one(),
            substeps: 8,
            velocity: VelocityRule::Centered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResolutionGap {
    pub s: f64,
    pub lowres_err: f64,
    pub highres_err: f64,
}

/// Sup-norm distance between the iterates (`x_k` for NAG, `y_k` for RAG) and
/// the low-resolution (AVD) and high-resolution ODEs, each started from the
/// iterate at its first aligned time `≥ t_match` with a centered-difference
/// velocity, over aligned times up to `horizon`.
pub fn resolution_gap<T: Scalar>(
    problem: &SmoothProblem<T>,
    setup: &ResolutionSetup<T>,
) -> Result<ResolutionGap, DynamicsError> {
    let h = setup.s.sqrt();
    if !(h > T::zero()) || setup.substeps == 0 {
        return Err(DynamicsError::InvalidSpec(
            "resolution gap needs s > 0 and substeps > 0".into(),
        ));
    }
    let iterations = (setup.horizon / h + setup.alpha).ceil().to_usize().unwrap_or(0) + 4;
    if iterations > 1_000_000 {
        return Err(DynamicsError::InvalidSpec(format!(
            "horizon/sqrt(s) needs {iterations} iterations, more than 10^6"
        )));
    }
    let cfg = SolverConfig::new(setup.x_init.clone(), setup.alpha, setup.s, iterations);
    let (trace, low, high) = match setup.which {
        GapTarget::Nag => (run_nag(problem, &cfg)?, Alignment::NagLowres, Alignment::NagHighres),
        GapTarget::Rag => (run_rag(problem, &cfg)?, Alignment::RagLowres, Alignment::RagHighres),
    };
    let lowres_err = ode_distance(problem, &trace, setup, low, OdeKind::Avd)?;
    let highres_err = ode_distance(problem, &trace, setup, high, OdeKind::Highres)?;
    Ok(ResolutionGap {
        s: setup.s.as_f64(),
        lowres_err: lowres_err.as_f64(),
        highres_err: highres_err.as_f64(),
    })
}

fn ode_distance<T: Scalar>(
    problem: &SmoothProblem<T>,
    trace: &Trace<T>,
    setup: &ResolutionSetup<T>,
    alignment: Alignment,
    kind: OdeKind,
) -> Result<T, DynamicsError> {
    let h = setup.s.sqrt();
    let aligned = align_iterates(trace, alignment, setup.s);
    let start = aligned
        .times
        .iter()
        .position(|&t| t >= setup.t_match)
        .filter(|&p| p >= 1 && aligned.indices[p] >= 1)
        .ok_or_else(|| DynamicsError::InvalidSpec("no iterate aligns with the match time".into()))?;
    let i0 = aligned.indices[start];
    let points = trace.mains();
    let (prev, here, next) = (points[i0 - 1], points[i0], points[i0 + 1]);
    let v0: Vec<T> = match setup.velocity {
        VelocityRule::Centered => {
            let two_h = T::lit(2.0) * h;
            next.iter().zip(prev).map(|(&a, &b)| (a - b) / two_h).collect()
        }
        VelocityRule::Forward => next.iter().zip(here).map(|(&a, &b)| (a - b) / h).collect(),
    };
    let t0 = aligned.times[start];
    let last = aligned
        .times
        .iter()
        .rposition(|&t| t <= setup.horizon)
        .filter(|&p| p > start + 10)
        .ok_or_else(|| DynamicsError::InvalidSpec("horizon too short for the step size".into()))?;
    let spec = OdeSpec::new(kind, here.to_vec())
        .with_alpha(setup.alpha)
        .with_s(setup.s)
        .with_t0(t0)
        .with_v0(v0);
    let dt = h / T::index(setup.substeps);
    let t_end = aligned.times[last];
    let run = integrate(problem, &spec, t_end, dt)?;
    let mut worst = T::zero();
    for (j, p) in (start..=last).enumerate() {
        let sample = j * setup.substeps;
        let Some(state) = run.states.get(sample) else { break };
        worst = worst.max(dist(points[aligned.indices[p]], state));
    }
    Ok(worst)
}
