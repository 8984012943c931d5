//! `report.json` layout. Every key here is listed in `docs/report-schema.md`.

use ravine_core::diagnostics::{EnergyKind, RateReport, SumWeight};
use ravine_core::dynamics::{GapTarget, OdeKind};
use ravine_core::solvers::Scheme;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub runs: Vec<RunReport>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    /// Run label, or `compare` for cross-run checks.
    pub run: String,
    pub check: String,
    pub status: Status,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn new(
        run: &str,
        check: &str,
        status: Status,
        measured: Option<f64>,
        threshold: Option<f64>,
        detail: String,
    ) -> Self {
        Self {
            run: run.to_string(),
            check: check.to_string(),
            status,
            measured,
            threshold,
            detail,
        }
    }

    pub fn skip(run: &str, check: &str, why: impl Into<String>) -> Self {
        Self::new(run, check, Status::Skip, None, None, why.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged,
    Error,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum RunReport {
    Solver(SolverReport),
    Ode(OdeReport),
    Resolution(ResolutionReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemInfo {
    pub kind: String,
    pub dim: usize,
    pub lipschitz: f64,
    pub mu: Option<f64>,
    pub g: String,
    pub seed: Option<u64>,
    pub f_star: Option<f64>,
    /// `analytic`, `estimated` or `none`.
    pub f_star_source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub label: String,
    pub scheme: Scheme,
    pub csv: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub alpha: f64,
    pub step: f64,
    pub step_lipschitz: f64,
    pub beta: f64,
    pub mu: f64,
    pub momentum: f64,
    pub max_iter: usize,
    pub k_start: usize,
    pub problem: ProblemInfo,
    pub records: usize,
    pub final_value: Option<f64>,
    pub final_gap: Option<f64>,
    pub slopes: Vec<SlopeEntry>,
    pub geometric_ratio: Option<f64>,
    pub energy: Option<EnergySummary>,
    pub summability: Vec<TailEntry>,
    pub min_grad: Option<MinGradSummary>,
    pub oscillations: Option<usize>,
    pub equivalence: Option<EquivalenceSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeEntry {
    /// `main` or `late`.
    pub window: String,
    pub fit: RateReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergySummary {
    pub kind: EnergyKind,
    pub from_k: usize,
    pub first: f64,
    pub max_increase: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailEntry {
    pub weight: SumWeight,
    pub k: usize,
    pub s_k: f64,
    pub s_2k: f64,
    /// `(S_2K − S_K) / S_K`.
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinGradSummary {
    pub at_100: f64,
    pub max: f64,
    pub window: (usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceSummary {
    pub nag_to_rag: f64,
    pub rag_to_nag: f64,
    pub max_iterate_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeReport {
    pub label: String,
    pub ode: OdeKind,
    pub csv: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub s: f64,
    pub mu: f64,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
    pub final_value: Option<f64>,
    pub oscillations: Option<usize>,
    pub exp_rate: Option<RateReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionReport {
    pub label: String,
    pub which: GapTarget,
    pub csv: String,
    pub alpha: f64,
    pub horizon: f64,
    pub rows: Vec<ResolutionRow>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionRow {
    pub s: f64,
    pub lowres_err: f64,
    pub highres_err: f64,
}
