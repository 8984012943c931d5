//! Discrete inertial schemes behind one stepping interface.
//!
//! Every run starts with zero initial velocity (`x_{k₀−1} = x_{k₀} = x_init`)
//! at `k₀ = k_start` and records `max_iter + 1` rows `k₀, …, k₀ + max_iter`.

mod equivalence;
mod schemes;
mod trace;

pub use equivalence::{nag_rag_equivalence_residual, EquivalenceResidual};
pub use schemes::{
    check_scheme, run_fista_like, run_gd, run_heavy_ball, run_igahd, run_inertial_prox, run_nag, run_rag, run_rapg,
    run_sc, run_scheme, sc_parameters, ImplicitVariant, ScVariant,
};
pub use trace::{Ordering, Record, Scheme, Trace};

use thiserror::Error;

use crate::prox::CompositeProblem;
use crate::Scalar;

/// Norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("step.lipschitz = {step_lipschitz} {} (step {step}, lipschitz {lipschitz}); lower the step or force the run",
        if *.strict { "must be < 1 while the Lyapunov monitor is on" } else { "exceeds 1" })]
    StepTooLarge {
        step_lipschitz: f64,
        step: f64,
        lipschitz: f64,
        strict: bool,
    },
    #[error("beta = {beta} is outside [0, 2*sqrt(step)) = [0, {upper})")]
    BetaOutOfRange { beta: f64, upper: f64 },
    #[error("run diverged at k = {k} (norm {norm})")]
    Diverged { k: usize, norm: f64 },
    #[error("no closed-form proximal map: {0}")]
    ProxUnavailable(String),
    #[error("strongly convex schemes need mu > 0, got {0}")]
    MuRequired(f64),
    #[error("x_init has dimension {got}, problem has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// How a Ravine-ordered run seeds `w_{k₀−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RavineSeed {
    /// `w_{k₀−1} = w_{k₀}`.
    #[default]
    ZeroVelocity,
    /// `w_{k₀−1} = x_init`, which makes `w_k` coincide with the `x_{k+1}` of a
    /// Nesterov-ordered run started at `x_init`.
    FromNesterov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Friction parameter α.
    pub alpha: T,
    pub step: T,
    /// Geometric damping β (IGAHD).
    pub beta: T,
    /// Strong convexity modulus μ.
    pub mu: T,
    /// Heavy-ball momentum m.
    pub momentum: T,
    pub max_iter: usize,
    pub x_init: Vec<T>,
    pub k_start: usize,
    /// Skip the `sL ≤ 1` and β-range checks.
    pub force: bool,
    /// Require `sL < 1` strictly.
    pub lyapunov_monitor: bool,
    pub ravine_seed: RavineSeed,
    /// Keep every iterate in the trace (off for long reference runs).
    pub store_iterates: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(x_init: Vec<T>, alpha: T, step: T, max_iter: usize) -> Self {
        Self {
            alpha,
            step,
            beta: T::zero(),
            mu: T::zero(),
            momentum: T::zero(),
            max_iter,
            x_init,
            k_start: 1,
            force: false,
            lyapunov_monitor: false,
            ravine_seed: RavineSeed::ZeroVelocity,
            store_iterates: true,
        }
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_momentum(mut self, momentum: T) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn with_k_start(mut self, k_start: usize) -> Self {
        self.k_start = k_start;
        self
    }

    pub fn forced(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn with_lyapunov_monitor(mut self, on: bool) -> Self {
        self.lyapunov_monitor = on;
        self
    }

    pub fn with_ravine_seed(mut self, seed: RavineSeed) -> Self {
        self.ravine_seed = seed;
        self
    }

    pub fn storing_iterates(mut self, store: bool) -> Self {
        self.store_iterates = store;
        self
    }

    /// Checks shapes, ranges and `sL ≤ 1` (strict under the Lyapunov monitor).
    pub fn validate(&self, problem: &CompositeProblem<T>) -> Result<(), SolverError> {
        let dim = problem.dim();
        if self.x_init.len() != dim {
            return Err(SolverError::DimensionMismatch {
                expected: dim,
                got: self.x_init.len(),
            });
        }
        if !crate::linalg::is_finite(&self.x_init) {
            return Err(SolverError::InvalidConfig("x_init has non-finite entries".into()));
        }
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidConfig("max_iter must be positive".into()));
        }
        if self.k_start == 0 {
            return Err(SolverError::InvalidConfig("k_start must be positive".into()));
        }
        if self.force {
            return Ok(());
        }
        let lipschitz = problem.lipschitz();
        let sl = self.step * lipschitz;
        // s = 1/L computed in floating point may land one ulp above 1
        let tolerance = T::one() + T::lit(8.0) * T::epsilon();
        let too_large = if self.lyapunov_monitor {
            sl >= T::one()
        } else {
            sl > tolerance
        };
        if too_large {
            return Err(SolverError::StepTooLarge {
                step_lipschitz: sl.as_f64(),
                step: self.step.as_f64(),
                lipschitz: lipschitz.as_f64(),
                strict: self.lyapunov_monitor,
            });
        }
        Ok(())
    }
}
