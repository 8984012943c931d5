//! Experiment configuration as read from JSON.

use std::path::{Path, PathBuf};

use ravine_core::dynamics::{BKind, GapTarget, OdeKind, OdeSpec};
use ravine_core::linalg::Matrix;
use ravine_core::objective::{
    make_ill_conditioned_2d, make_quadratic, power_law_quadratic, random_psd_quadratic, zero_problem, QuadraticSpec,
};
use ravine_core::prox::{prox_box, prox_l1, prox_zero, random_lasso, CompositeProblem, LassoSpec, ProxFriendly};
use ravine_core::solvers::{check_scheme, RavineSeed, Scheme, SolverConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_OUTPUT: &str = "ravine-out";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub g: Option<GConfig>,
    #[serde(default)]
    pub solvers: Vec<SolverEntry>,
    #[serde(default, alias = "ode")]
    pub odes: Vec<OdeEntry>,
    #[serde(default)]
    pub resolution: Option<ResolutionConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `½⟨Ax, x⟩ − ⟨b, x⟩ + c`
    Quadratic {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        #[serde(default)]
        shift: f64,
    },
    IllConditioned {
        condition: f64,
    },
    RandomPsd {
        dimension: usize,
        condition: f64,
        seed: u64,
    },
    PowerLaw {
        dimension: usize,
        min_eigenvalue: f64,
        exponent: f64,
    },
    Lasso {
        #[serde(default = "lasso_rows")]
        rows: usize,
        #[serde(default = "lasso_dim")]
        dimension: usize,
        #[serde(default = "lasso_lambda")]
        lambda: f64,
        #[serde(default = "lasso_min_eig")]
        min_eigenvalue: f64,
        #[serde(default = "lasso_support")]
        support: usize,
        #[serde(default = "lasso_noise")]
        noise: f64,
        #[serde(default = "lasso_seed")]
        seed: u64,
    },
    Zero {
        dimension: usize,
    },
}

fn lasso_rows() -> usize {
    LassoSpec::default().rows
}
fn lasso_dim() -> usize {
    LassoSpec::default().dim
}
fn lasso_lambda() -> f64 {
    LassoSpec::default().lambda
}
fn lasso_min_eig() -> f64 {
    LassoSpec::default().min_eigenvalue
}
fn lasso_support() -> usize {
    LassoSpec::default().support
}
fn lasso_noise() -> f64 {
    LassoSpec::default().noise
}
fn lasso_seed() -> u64 {
    LassoSpec::default().seed
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GConfig {
    Zero,
    L1 { lambda: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub name: String,
    /// File stem and report key; defaults to `<name>` or `<name>_<index>`.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Absolute step; exclusive with `step_lipschitz`.
    #[serde(default)]
    pub step: Option<f64>,
    /// Step given as the product `sL`.
    #[serde(default)]
    pub step_lipschitz: Option<f64>,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Defaults to the all-ones vector.
    #[serde(default)]
    pub x_init: Option<Vec<f64>>,
    #[serde(default = "default_k_start")]
    pub k_start: usize,
    #[serde(default)]
    pub force: bool,
    #[serde(default)]
    pub lyapunov_monitor: bool,
    #[serde(default)]
    pub ravine_seed: RavineSeed,
    #[serde(default = "yes")]
    pub store_iterates: bool,
}

fn default_alpha() -> f64 {
    3.0
}
fn default_max_iter() -> usize {
    1000
}
fn default_k_start() -> usize {
    1
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeEntry {
    pub kind: OdeKind,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub b_kind: BKind,
    #[serde(default = "default_t0")]
    pub t0: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
}

fn default_t0() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    #[serde(default = "both_targets")]
    pub which: Vec<GapTarget>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub steps: Vec<f64>,
    pub horizon: f64,
    #[serde(default)]
    pub x_init: Option<Vec<f64>>,
}

fn both_targets() -> Vec<GapTarget> {
    vec![GapTarget::Nag, GapTarget::Rag]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "yes")]
    pub energies: bool,
    #[serde(default = "yes")]
    pub slopes: bool,
    #[serde(default)]
    pub summability: bool,
    #[serde(default)]
    pub min_grad: bool,
    #[serde(default)]
    pub oscillations: bool,
    #[serde(default)]
    pub equivalence: bool,
    #[serde(default = "default_slope_window")]
    pub slope_window: (usize, usize),
    #[serde(default = "default_late_window")]
    pub late_window: (usize, usize),
    /// Iterations for the reference minimum when the problem has none.
    #[serde(default = "default_estimate_budget")]
    pub estimate_budget: usize,
}

fn default_slope_window() -> (usize, usize) {
    (100, 10_000)
}
fn default_late_window() -> (usize, usize) {
    (1000, 10_000)
}
fn default_estimate_budget() -> usize {
    ravine_core::diagnostics::MIN_ESTIMATE_BUDGET
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            energies: true,
            slopes: true,
            summability: false,
            min_grad: false,
            oscillations: false,
            equivalence: false,
            slope_window: default_slope_window(),
            late_window: default_late_window(),
            estimate_budget: default_estimate_budget(),
        }
    }
}

/// A solver entry resolved against the problem.
#[derive(Debug, Clone)]
pub struct PreparedSolver {
    pub label: String,
    pub scheme: Scheme,
    pub cfg: SolverConfig<f64>,
}

#[derive(Debug, Clone)]
pub struct PreparedOde {
    pub label: String,
    pub spec: OdeSpec<f64>,
    pub dt: f64,
    pub t_end: f64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses `text` and returns the config with its hash.
    pub fn parse(text: &str) -> Result<(Self, String), CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let hash = config_hash(&value);
        let config: Self = serde_path_to_error::deserialize(&value).map_err(|e| {
            let path = e.path().to_string();
            match path.as_str() {
                "." => CliError::Config(e.into_inner().to_string()),
                _ => CliError::Config(format!("{path}: {}", e.into_inner())),
            }
        })?;
        Ok((config, hash))
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }

    /// Builds the composite problem `f + g`, plus the seed used, if any.
    pub fn build_problem(&self) -> Result<(CompositeProblem<f64>, Option<u64>), CliError> {
        let bad = |key: &str, e: &dyn std::fmt::Display| CliError::Config(format!("problem.{key}: {e}"));
        let (smooth, builtin_g, seed) = match &self.problem {
            ProblemConfig::Quadratic { matrix, offset, shift } => {
                let m = Matrix::from_rows(matrix).ok_or_else(|| bad("matrix", &"rows must form a square matrix"))?;
                let spec = QuadraticSpec::new(m, offset.clone()).with_shift(*shift);
                (make_quadratic(spec).map_err(|e| bad("matrix", &e))?, None, None)
            }
            ProblemConfig::IllConditioned { condition } => (
                make_ill_conditioned_2d(*condition).map_err(|e| bad("condition", &e))?,
                None,
                None,
            ),
            ProblemConfig::RandomPsd {
                dimension,
                condition,
                seed,
            } => (
                random_psd_quadratic(*dimension, *condition, *seed).map_err(|e| bad("dimension", &e))?,
                None,
                Some(*seed),
            ),
            ProblemConfig::PowerLaw {
                dimension,
                min_eigenvalue,
                exponent,
            } => (
                power_law_quadratic(*dimension, *min_eigenvalue, *exponent).map_err(|e| bad("min_eigenvalue", &e))?,
                None,
                None,
            ),
            ProblemConfig::Lasso {
                rows,
                dimension,
                lambda,
                min_eigenvalue,
                support,
                noise,
                seed,
            } => {
                let spec = LassoSpec {
                    rows: *rows,
                    dim: *dimension,
                    lambda: *lambda,
                    min_eigenvalue: *min_eigenvalue,
                    support: *support,
                    noise: *noise,
                    seed: *seed,
                };
                let p = random_lasso(&spec).map_err(|e| bad("kind", &e))?;
                (p.smooth, Some(p.nonsmooth), Some(*seed))
            }
            ProblemConfig::Zero { dimension } => (zero_problem(*dimension), None, None),
        };
        let g = match (&self.g, builtin_g) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "g: the lasso problem carries its own l1 term; drop the g key or use problem.lambda".into(),
                ))
            }
            (None, Some(g)) => g,
            (None, None) => prox_zero(),
            (Some(cfg), None) => build_g(cfg)?,
        };
        let problem = CompositeProblem::new(smooth, g).map_err(|e| CliError::Config(format!("g: {e}")))?;
        Ok((problem, seed))
    }

    pub fn prepare_solvers(
        &self,
        problem: &CompositeProblem<f64>,
        force: bool,
    ) -> Result<Vec<PreparedSolver>, CliError> {
        let dim = problem.dim();
        let lipschitz = problem.lipschitz();
        let mut out: Vec<PreparedSolver> = Vec::with_capacity(self.solvers.len());
        for (i, e) in self.solvers.iter().enumerate() {
            let key = |field: &str| format!("solvers[{i}].{field}");
            let scheme = Scheme::from_name(&e.name).ok_or_else(|| {
                let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
                CliError::Config(format!(
                    "{}: unknown solver `{}` (expected one of {})",
                    key("name"),
                    e.name,
                    names.join(", ")
                ))
            })?;
            let step = match (e.step, e.step_lipschitz) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config(format!(
                        "{}: give either step or step_lipschitz, not both",
                        key("step")
                    )))
                }
                (Some(s), None) => s,
                (None, Some(sl)) if lipschitz > 0.0 => sl / lipschitz,
                (None, Some(_)) => {
                    return Err(CliError::Config(format!(
                        "{}: lipschitz constant is 0",
                        key("step_lipschitz")
                    )))
                }
                (None, None) if lipschitz > 0.0 => 1.0 / lipschitz,
                (None, None) => 1.0,
            };
            let x_init = e.x_init.clone().unwrap_or_else(|| vec![1.0; dim]);
            let cfg = SolverConfig::new(x_init, e.alpha, step, e.max_iter)
                .with_beta(e.beta)
                .with_mu(e.mu)
                .with_momentum(e.momentum)
                .with_k_start(e.k_start)
                .forced(e.force || force)
                .with_lyapunov_monitor(e.lyapunov_monitor)
                .with_ravine_seed(e.ravine_seed)
                .storing_iterates(e.store_iterates);
            check_scheme(scheme, problem)
                .and_then(|()| cfg.validate(problem))
                .map_err(|err| CliError::Config(format!("solvers[{i}] ({}): {err}", e.name)))?;
            let label = e.label.clone().unwrap_or_else(|| {
                let same = self
                    .solvers
                    .iter()
                    .filter(|o| o.name == e.name && o.label.is_none())
                    .count();
                if same > 1 {
                    format!("{}_{i}", e.name)
                } else {
                    e.name.clone()
                }
            });
            check_label(&label, &key("label"))?;
            if out.iter().any(|p| p.label == label) {
                return Err(CliError::Config(format!("{}: duplicate label `{label}`", key("label"))));
            }
            out.push(PreparedSolver { label, scheme, cfg });
        }
        Ok(out)
    }

    pub fn prepare_odes(&self, dim: usize) -> Result<Vec<PreparedOde>, CliError> {
        let mut out: Vec<PreparedOde> = Vec::with_capacity(self.odes.len());
        for (i, e) in self.odes.iter().enumerate() {
            let x0 = e.x0.clone().unwrap_or_else(|| vec![1.0; dim]);
            let mut spec = OdeSpec::new(e.kind, x0)
                .with_alpha(e.alpha)
                .with_beta(e.beta)
                .with_gamma(e.gamma)
                .with_s(e.s)
                .with_mu(e.mu)
                .with_b_kind(e.b_kind)
                .with_t0(e.t0);
            if let Some(v0) = &e.v0 {
                spec = spec.with_v0(v0.clone());
            }
            if spec.x0.len() != dim || spec.v0.len() != dim {
                return Err(CliError::Config(format!("odes[{i}].x0: expected dimension {dim}")));
            }
            if !(e.t_end > e.t0) || !(e.dt > 0.0) || e.dt > (e.t_end - e.t0) / 10.0 {
                return Err(CliError::Config(format!(
                    "odes[{i}].dt: need t_end > t0 and 0 < dt <= (t_end - t0)/10 (t0={}, t_end={}, dt={})",
                    e.t0, e.t_end, e.dt
                )));
            }
            if e.kind.singular_at_zero() && !(e.t0 > 0.0) {
                return Err(CliError::Config(format!(
                    "odes[{i}].t0: {} needs t0 > 0",
                    e.kind.name()
                )));
            }
            let label = e.label.clone().unwrap_or_else(|| format!("ode_{}_{i}", e.kind.name()));
            check_label(&label, &format!("odes[{i}].label"))?;
            if out.iter().any(|p| p.label == label) {
                return Err(CliError::Config(format!("odes[{i}].label: duplicate label `{label}`")));
            }
            out.push(PreparedOde {
                label,
                spec,
                dt: e.dt,
                t_end: e.t_end,
            });
        }
        Ok(out)
    }
}

fn build_g(cfg: &GConfig) -> Result<ProxFriendly<f64>, CliError> {
    match cfg {
        GConfig::Zero => Ok(prox_zero()),
        GConfig::L1 { lambda } => prox_l1(*lambda).map_err(|e| CliError::Config(format!("g.lambda: {e}"))),
        GConfig::Box { lo, hi } => {
            prox_box(lo.clone(), hi.clone()).map_err(|e| CliError::Config(format!("g.lo/g.hi: {e}")))
        }
    }
}

fn check_label(label: &str, key: &str) -> Result<(), CliError> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{key}: `{label}` must be nonempty and use only [A-Za-z0-9_.-]"
        )))
    }
}

/// SHA-256 of the config re-serialized with sorted keys and no whitespace.
pub fn config_hash(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).unwrap_or_default();
    format!("sha256:{}", hex::encode(Sha256::digest(canonical.as_bytes())))
}
