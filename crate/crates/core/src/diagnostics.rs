//! Lyapunov energies, summability monitors, rate fits, oscillation counts and
//! reference-minimum estimation over solver traces.

use thiserror::Error;

use crate::prox::CompositeProblem;
use crate::solvers::{run_fista_like, SolverConfig, SolverError, Trace};
use crate::Scalar;

/// Values at or below this are excluded from log fits.
pub const FIT_FLOOR: f64 = 1e-13;

/// Minimum number of usable points for a fit.
pub const MIN_FIT_POINTS: usize = 10;

/// Smallest budget accepted by [`estimate_min`].
pub const MIN_ESTIMATE_BUDGET: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least {needed} points above the floor in the window, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("estimate_min needs a budget of at least {MIN_ESTIMATE_BUDGET} iterations, got {0}")]
    BudgetTooSmall(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    #[serde(rename = "E_nag")]
    Nag,
    #[serde(rename = "E_rag")]
    Rag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord<T> {
    pub k: usize,
    pub value: T,
    pub kind: EnergyKind,
}

/// `E_k = t_k²(θ(x_k) − θ(z)) + ‖x_{k−1} − z + t_k(x_k − x_{k−1})‖² / (2s)`
/// with `t_k = (k − 1)/(α − 1)`, for every row after the first.
///
/// Returns nothing for traces recorded without iterates.
pub fn energy_nag<T: Scalar>(trace: &Trace<T>, anchor: &[T], anchor_value: T, alpha: T, s: T) -> Vec<EnergyRecord<T>> {
    if !trace.has_iterates() {
        return Vec::new();
    }
    let half = T::lit(0.5);
    trace
        .records
        .windows(2)
        .map(|pair| {
            let (prev, cur) = (&pair[0], &pair[1]);
            let t = (T::index(cur.k) - T::one()) / (alpha - T::one());
            let mut sq = T::zero();
            for ((&xp, &x), &z) in prev.main.iter().zip(&cur.main).zip(anchor) {
                let v = xp - z + t * (x - xp);
                sq += v * v;
            }
            EnergyRecord {
                k: cur.k,
                value: t * t * (cur.value - anchor_value) + half * sq / s,
                kind: EnergyKind::Nag,
            }
        })
        .collect()
}

/// `E_k = s(k + 2 − α)(k + 1)(f(y_k) − f(x*)) + ½‖z_k‖²` with
/// `z_k = (α − 1)(y_{k+1} − x*) + (k + 2 − α)(y_{k+1} − w_k)`, for every row but
/// the last.
pub fn energy_rag<T: Scalar>(trace: &Trace<T>, anchor: &[T], anchor_value: T, alpha: T, s: T) -> Vec<EnergyRecord<T>> {
    if !trace.has_iterates() {
        return Vec::new();
    }
    let half = T::lit(0.5);
    trace
        .records
        .windows(2)
        .map(|pair| {
            let (cur, next) = (&pair[0], &pair[1]);
            let k = T::index(cur.k);
            let a = k + T::lit(2.0) - alpha;
            let mut sq = T::zero();
            for ((&yn, &w), &z) in next.main.iter().zip(&cur.aux).zip(anchor) {
                let v = (alpha - T::one()) * (yn - z) + a * (yn - w);
                sq += v * v;
            }
            EnergyRecord {
                k: cur.k,
                value: s * a * (k + T::one()) * (cur.value - anchor_value) + half * sq,
                kind: EnergyKind::Rag,
            }
        })
        .collect()
}

/// Largest `E_{k+1} − E_k` over consecutive records with `k ≥ from_k`.
pub fn max_energy_increase<T: Scalar>(energy: &[EnergyRecord<T>], from_k: usize) -> T {
    energy
        .windows(2)
        .filter(|p| p[0].k >= from_k)
        .map(|p| p[1].value - p[0].value)
        .fold(T::neg_infinity(), T::max)
}

/// Whether `E_{k+1} ≤ E_k + rel_slack · |E_first|` for all `k ≥ from_k`, where
/// `E_first` is the first energy at or after `from_k`.
pub fn is_nonincreasing<T: Scalar>(energy: &[EnergyRecord<T>], from_k: usize, rel_slack: T) -> bool {
    let Some(first) = energy.iter().find(|e| e.k >= from_k) else {
        return true;
    };
    let slack = rel_slack * first.value.abs();
    !(max_energy_increase(energy, from_k) > slack)
}

/// Copies energies into `trace.energy`, aligned with the records (`NaN` where undefined).
pub fn attach_energy<T: Scalar>(trace: &mut Trace<T>, energy: &[EnergyRecord<T>]) {
    let mut out = vec![T::nan(); trace.len()];
    let first_k = trace.records.first().map_or(0, |r| r.k);
    for e in energy {
        if let Some(slot) = e.k.checked_sub(first_k).and_then(|i| out.get_mut(i)) {
            *slot = e.value;
        }
    }
    trace.energy = out;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumWeight {
    /// `k²‖∇f‖²`
    K2Gradsq,
    /// `k(f − f*)`
    KGap,
}

/// Partial sums `S_K = Σ_{k ≤ K} term_k`, one per record; `None` for
/// [`SumWeight::KGap`] when `f*` is unknown.
pub fn summability<T: Scalar>(trace: &Trace<T>, weight: SumWeight) -> Option<Vec<T>> {
    let terms: Vec<T> = match weight {
        SumWeight::K2Gradsq => trace
            .records
            .iter()
            .map(|r| {
                let k = T::index(r.k);
                k * k * r.grad_norm * r.grad_norm
            })
            .collect(),
        SumWeight::KGap => trace
            .gaps()?
            .into_iter()
            .zip(&trace.records)
            .map(|(g, r)| T::index(r.k) * g)
            .collect(),
    };
    let mut acc = T::zero();
    Some(
        terms
            .into_iter()
            .map(|t| {
                acc += t;
                acc
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TailCheck {
    pub k: usize,
    pub s_k: f64,
    pub s_2k: f64,
    pub passes: bool,
}

/// `S_{2K} − S_K ≤ ratio · S_K` at the largest `K` with `2K` recorded.
pub fn tail_check<T: Scalar>(ks: &[usize], partial: &[T], ratio: f64) -> Option<TailCheck> {
    let k_max = *ks.last()?;
    let big_k = k_max / 2;
    let at = |k: usize| ks.iter().position(|&x| x == k).map(|i| partial[i].as_f64());
    let s_k = at(big_k)?;
    let s_2k = at(2 * big_k)?;
    Some(TailCheck {
        k: big_k,
        s_k,
        s_2k,
        passes: s_2k - s_k <= ratio * s_k,
    })
}

/// `k³ · min_{i ≤ k} ‖∇f‖²` for every record.
pub fn min_grad_statistic<T: Scalar>(trace: &Trace<T>) -> Vec<(usize, T)> {
    let mut best = T::infinity();
    trace
        .records
        .iter()
        .map(|r| {
            best = best.min(r.grad_norm * r.grad_norm);
            let k = T::index(r.k);
            (r.k, k * k * k * best)
        })
        .collect()
}

/// Largest `k³ · min_{i ≤ k} ‖∇f‖²` over `k ∈ [k_min, k_max]`.
pub fn min_grad_rate<T: Scalar>(trace: &Trace<T>, k_min: usize, k_max: usize) -> T {
    min_grad_statistic(trace)
        .into_iter()
        .filter(|(k, _)| (k_min..=k_max).contains(k))
        .fold(T::zero(), |m, (_, v)| m.max(v))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateReport {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub floor_hits: usize,
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn fit<T: Scalar>(
    xs: &[f64],
    values: &[T],
    lo: f64,
    hi: f64,
    transform_x: impl Fn(f64) -> f64,
    transform_y: impl Fn(f64) -> f64,
) -> Result<RateReport, DiagnosticsError> {
    let mut floor_hits = 0;
    let mut points = Vec::new();
    for (&x, &v) in xs.iter().zip(values) {
        if x < lo || x > hi {
            continue;
        }
        let v = v.as_f64();
        if !(v > FIT_FLOOR) || !v.is_finite() {
            floor_hits += 1;
            continue;
        }
        points.push((transform_x(x), transform_y(v)));
    }
    if points.len() < MIN_FIT_POINTS {
        return Err(DiagnosticsError::InsufficientData {
            needed: MIN_FIT_POINTS,
            found: points.len(),
        });
    }
    let (slope, intercept) = least_squares(&points);
    Ok(RateReport {
        slope,
        intercept,
        window: (lo, hi),
        n_points: points.len(),
        floor_hits,
    })
}

/// Least-squares slope of `log₁₀ value` against `log₁₀ k` over `k ∈ [k_min, k_max]`.
pub fn rate_slope<T: Scalar>(
    ks: &[usize],
    values: &[T],
    k_min: usize,
    k_max: usize,
) -> Result<RateReport, DiagnosticsError> {
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    fit(&xs, values, k_min as f64, k_max as f64, f64::log10, f64::log10)
}

/// Least-squares slope of `ln value` against `k`; `exp(slope)` is the mean
/// per-iteration contraction factor.
pub fn geometric_rate<T: Scalar>(
    ks: &[usize],
    values: &[T],
    k_min: usize,
    k_max: usize,
) -> Result<RateReport, DiagnosticsError> {
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    fit(&xs, values, k_min as f64, k_max as f64, |x| x, f64::ln)
}

/// Least-squares slope of `ln value` against time `t ∈ [t_min, t_max]`.
pub fn exponential_rate<T: Scalar>(
    times: &[f64],
    values: &[T],
    t_min: f64,
    t_max: f64,
) -> Result<RateReport, DiagnosticsError> {
    fit(times, values, t_min, t_max, |x| x, f64::ln)
}

/// Number of strict interior local maxima `s[i−1] < s[i] > s[i+1]`.
pub fn count_oscillations<T: Scalar>(series: &[T]) -> usize {
    series.windows(3).filter(|w| w[0] < w[1] && w[1] > w[2]).count()
}

/// Reference value for `min θ`: the smallest objective seen along a
/// Nesterov-ordered run with `α = 4`, `s = 1/L` over `budget` iterations,
/// lowered by `1e-15 (1 + |min|)`.
pub fn estimate_min<T: Scalar>(
    problem: &CompositeProblem<T>,
    x_init: &[T],
    budget: usize,
) -> Result<T, DiagnosticsError> {
    if budget < MIN_ESTIMATE_BUDGET {
        return Err(DiagnosticsError::BudgetTooSmall(budget));
    }
    if problem.smooth.is_identically_zero() && problem.nonsmooth.is_zero() {
        return Ok(T::zero());
    }
    let lipschitz = problem.lipschitz();
    // f ≡ 0 with a nonsmooth g: any step works, the prox is exact
    let step = if lipschitz > T::zero() {
        T::one() / lipschitz
    } else {
        T::one()
    };
    let cfg = SolverConfig::new(x_init.to_vec(), T::lit(4.0), step, budget).storing_iterates(false);
    let trace = run_fista_like(problem, &cfg)?;
    let best = trace
        .records
        .iter()
        .flat_map(|r| [r.value, r.aux_value])
        .filter(|v| v.is_finite())
        .fold(T::infinity(), T::min);
    Ok(best - T::lit(1e-15) * (T::one() + best.abs()))
}
