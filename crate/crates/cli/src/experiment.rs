//! Executes the entries of a config and assembles the report.

use std::path::{Path, PathBuf};

use ravine_core::diagnostics::*;
use ravine_core::dynamics::{integrate, resolution_gap, GapTarget, OdeKind, ResolutionGap, ResolutionSetup};
use ravine_core::prox::{CompositeProblem, ProxFriendly};
use ravine_core::solvers::{nag_rag_equivalence_residual, run_scheme, Ordering, Scheme, SolverError, Trace};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, PreparedOde, PreparedSolver, ProblemConfig};
use crate::csv::{self, ExtraColumns};
use crate::error::CliError;
use crate::report::*;

pub const SLOPE_BOUND: f64 = -1.8;
pub const CONTRAST_SLOPE_BOUND: f64 = -1.3;
pub const LATE_SLOPE_BOUND: f64 = -2.0;
pub const ENERGY_SLACK: f64 = 1e-10;
pub const TAIL_RATIO: f64 = 0.2;
pub const MIN_GRAD_GROWTH: f64 = 10.0;
pub const EQUIVALENCE_TOL: f64 = 1e-11;
pub const RESOLUTION_CONTRACTION: f64 = 1.5;
pub const EXP_RATE_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Compare,
    Ode,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub force: bool,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub out_dir: PathBuf,
    /// A run stopped on something other than divergence.
    pub runtime_error: bool,
}

impl Outcome {
    pub fn any_fail(&self) -> bool {
        self.report.verdicts.iter().any(|v| v.status == Status::Fail)
    }

    pub fn exit_code(&self) -> i32 {
        if self.runtime_error {
            1
        } else if self.any_fail() {
            2
        } else {
            0
        }
    }
}

struct Context<'a> {
    problem: &'a CompositeProblem<f64>,
    info: ProblemInfo,
    f_star: Option<f64>,
    config: &'a ExperimentConfig,
    out_dir: &'a Path,
    command: Command,
}

pub fn execute(command: Command, config_path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let (config, hash) = ExperimentConfig::load(config_path)?;
    execute_config(command, &config, hash, opts)
}

pub fn execute_config(
    command: Command,
    config: &ExperimentConfig,
    config_hash: String,
    opts: &Options,
) -> Result<Outcome, CliError> {
    let (problem, seed) = config.build_problem()?;
    let solvers = match command {
        Command::Run | Command::Compare => config.prepare_solvers(&problem, opts.force)?,
        Command::Ode => Vec::new(),
    };
    let odes = match command {
        Command::Run | Command::Ode => config.prepare_odes(problem.dim())?,
        Command::Compare => Vec::new(),
    };
    let resolution = match command {
        Command::Run | Command::Ode => config.resolution.clone(),
        Command::Compare => None,
    };
    match command {
        Command::Compare if solvers.len() < 2 => {
            return Err(CliError::Config(
                "solvers: compare needs at least two solver entries".into(),
            ))
        }
        Command::Ode if odes.is_empty() && resolution.is_none() => {
            return Err(CliError::Config(
                "odes: ode needs at least one odes entry or a resolution block".into(),
            ))
        }
        Command::Run if solvers.is_empty() && odes.is_empty() && resolution.is_none() => {
            return Err(CliError::Config(
                "solvers: need at least one solver or odes entry".into(),
            ))
        }
        _ => {}
    }
    if (!odes.is_empty() || resolution.is_some()) && !problem.nonsmooth.is_zero() {
        return Err(CliError::Config(
            "odes: the dynamics need a smooth problem (g must be zero)".into(),
        ));
    }
    for s in &solvers {
        if let Some(o) = odes.iter().find(|o| o.label == s.label) {
            return Err(CliError::Config(format!(
                "odes: label `{}` is already used by a solver",
                o.label
            )));
        }
    }
    if let Some(r) = &resolution {
        if r.steps.is_empty() || r.steps.iter().any(|&s| !(s > 0.0)) {
            return Err(CliError::Config(
                "resolution.steps: need at least one positive step".into(),
            ));
        }
        if r.which.is_empty() {
            return Err(CliError::Config("resolution.which: need nag and/or rag".into()));
        }
        if let Some(x) = &r.x_init {
            if x.len() != problem.dim() {
                return Err(CliError::Config(format!(
                    "resolution.x_init: expected dimension {}",
                    problem.dim()
                )));
            }
        }
    }

    let out_dir = config.output_dir(opts.out.as_deref());
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::write(&out_dir, e))?;

    let needs_f_star = !solvers.is_empty() && problem.theta_min.is_none();
    let (f_star, source) = match problem.theta_min {
        Some(v) => (Some(v), "analytic"),
        None if needs_f_star => {
            let x0 = solvers
                .first()
                .map_or_else(|| vec![1.0; problem.dim()], |s| s.cfg.x_init.clone());
            let v = estimate_min(&problem, &x0, config.diagnostics.estimate_budget)
                .map_err(|e| CliError::Config(format!("diagnostics.estimate_budget: {e}")))?;
            (Some(v), "estimated")
        }
        None => (None, "none"),
    };
    let info = ProblemInfo {
        kind: problem_kind(&config.problem).to_string(),
        dim: problem.dim(),
        lipschitz: problem.lipschitz(),
        mu: problem.smooth.strong_convexity(),
        g: describe_g(&problem.nonsmooth),
        seed,
        f_star,
        f_star_source: source.to_string(),
    };
    let ctx = Context {
        problem: &problem,
        info,
        f_star,
        config,
        out_dir: &out_dir,
        command,
    };

    let mut tasks: Vec<Task> = Vec::new();
    tasks.extend(solvers.iter().map(Task::Solver));
    tasks.extend(odes.iter().map(Task::Ode));
    if let Some(r) = &resolution {
        tasks.extend(r.which.iter().map(|&w| Task::Resolution(w)));
    }

    let work = || -> Vec<Result<TaskOutput, CliError>> { tasks.par_iter().map(|t| t.run(&ctx)).collect() };
    let results = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot start {n} worker threads: {e}")))?
            .install(work),
        None => work(),
    };

    let mut runs = Vec::new();
    let mut verdicts = Vec::new();
    let mut runtime_error = false;
    let mut solver_outputs = Vec::new();
    let mut ode_outputs = Vec::new();
    let mut resolution_rows: Vec<(GapTarget, ResolutionGap)> = Vec::new();
    for r in results {
        let out = r?;
        runtime_error |= out.runtime_error;
        verdicts.extend(out.verdicts);
        match &out.run {
            RunReport::Solver(s) => solver_outputs.push(s.clone()),
            RunReport::Ode(o) => ode_outputs.push(o.clone()),
            RunReport::Resolution(res) => {
                resolution_rows.extend(res.rows.iter().map(|row| {
                    (
                        res.which,
                        ResolutionGap {
                            s: row.s,
                            lowres_err: row.lowres_err,
                            highres_err: row.highres_err,
                        },
                    )
                }));
            }
        }
        runs.push(out.run);
    }
    if resolution.is_some() {
        csv::write(&out_dir.join(RESOLUTION_CSV), &csv::resolution_csv(&resolution_rows))?;
    }
    if command == Command::Compare {
        verdicts.extend(compare_verdicts(&solver_outputs));
    }
    verdicts.extend(ode_cross_verdicts(&ode_outputs));

    let report = Report {
        config_hash,
        runs,
        verdicts,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    csv::write(&out_dir.join(REPORT_JSON), &(json + "\n"))?;
    Ok(Outcome {
        report,
        out_dir,
        runtime_error,
    })
}

pub const REPORT_JSON: &str = "report.json";
pub const RESOLUTION_CSV: &str = "resolution.csv";

fn describe_g(g: &ProxFriendly<f64>) -> String {
    match g {
        ProxFriendly::Zero => "zero".into(),
        ProxFriendly::L1 { lambda } => format!("l1(lambda={lambda})"),
        ProxFriendly::Box { .. } => "box".into(),
    }
}

fn problem_kind(p: &ProblemConfig) -> &'static str {
    match p {
        ProblemConfig::Quadratic { .. } => "quadratic",
        ProblemConfig::IllConditioned { .. } => "ill_conditioned",
        ProblemConfig::RandomPsd { .. } => "random_psd",
        ProblemConfig::PowerLaw { .. } => "power_law",
        ProblemConfig::Lasso { .. } => "lasso",
        ProblemConfig::Zero { .. } => "zero",
    }
}

enum Task<'a> {
    Solver(&'a PreparedSolver),
    Ode(&'a PreparedOde),
    Resolution(GapTarget),
}

struct TaskOutput {
    run: RunReport,
    verdicts: Vec<Verdict>,
    runtime_error: bool,
}

impl Task<'_> {
    fn run(&self, ctx: &Context) -> Result<TaskOutput, CliError> {
        match self {
            Task::Solver(s) => run_solver(ctx, s),
            Task::Ode(o) => run_ode(ctx, o),
            Task::Resolution(w) => run_resolution(ctx, *w),
        }
    }
}

fn is_accelerated(scheme: Scheme) -> bool {
    matches!(scheme.ordering(), Ordering::Nesterov | Ordering::Ravine)
        && !matches!(scheme, Scheme::ScProx | Scheme::ScNesterov | Scheme::ScRavine)
}

fn is_strongly_convex_scheme(scheme: Scheme) -> bool {
    matches!(scheme, Scheme::ScProx | Scheme::ScNesterov | Scheme::ScRavine)
}

fn run_solver(ctx: &Context, solver: &PreparedSolver) -> Result<TaskOutput, CliError> {
    let label = solver.label.as_str();
    let cfg = &solver.cfg;
    let diag = &ctx.config.diagnostics;
    let mut report = SolverReport {
        label: label.to_string(),
        scheme: solver.scheme,
        csv: None,
        status: RunStatus::Ok,
        error: None,
        alpha: cfg.alpha,
        step: cfg.step,
        step_lipschitz: cfg.step * ctx.problem.lipschitz(),
        beta: cfg.beta,
        mu: cfg.mu,
        momentum: cfg.momentum,
        max_iter: cfg.max_iter,
        k_start: cfg.k_start,
        problem: ctx.info.clone(),
        records: 0,
        final_value: None,
        final_gap: None,
        slopes: Vec::new(),
        geometric_ratio: None,
        energy: None,
        summability: Vec::new(),
        min_grad: None,
        oscillations: None,
        equivalence: None,
    };
    let mut verdicts = Vec::new();

    let mut trace = match run_scheme(solver.scheme, ctx.problem, cfg) {
        Ok(t) => t,
        Err(e) => {
            let diverged = matches!(e, SolverError::Diverged { .. });
            report.status = if diverged {
                RunStatus::Diverged
            } else {
                RunStatus::Error
            };
            report.error = Some(e.to_string());
            verdicts.push(Verdict::new(
                label,
                "completed",
                Status::Fail,
                None,
                None,
                e.to_string(),
            ));
            return Ok(TaskOutput {
                run: RunReport::Solver(report),
                verdicts,
                runtime_error: !diverged,
            });
        }
    };
    if let Some(f) = ctx.f_star {
        trace = trace.with_f_star(f);
    }
    verdicts.push(Verdict::new(
        label,
        "completed",
        Status::Pass,
        Some(trace.len() as f64),
        None,
        format!("{} records", trace.len()),
    ));
    report.records = trace.len();
    let last = trace.last().expect("a run records at least its start");
    let last_k = last.k;
    let final_value = trace.objective().last().copied();
    report.final_value = final_value;
    report.final_gap = trace.gaps().and_then(|g| g.last().copied());

    if diag.slopes {
        slope_verdicts(
            &trace,
            cfg.alpha,
            cfg.mu,
            cfg.step,
            cfg.k_start,
            last_k,
            diag,
            &mut report,
            &mut verdicts,
            label,
        );
    }
    if diag.energies {
        energy_verdict(ctx, &mut trace, solver, &mut report, &mut verdicts);
    }
    let mut extra = ExtraColumns::default();
    if diag.summability {
        extra.sum_k2_grad2 = summability(&trace, SumWeight::K2Gradsq);
        extra.sum_k_gap = summability(&trace, SumWeight::KGap);
        summability_verdicts(&trace, solver, &extra, &mut report, &mut verdicts);
    }
    if diag.min_grad {
        min_grad_verdict(&trace, solver, last_k, &mut report, &mut verdicts);
    }
    if diag.oscillations || ctx.command == Command::Compare {
        report.oscillations = Some(count_oscillations(&trace.objective()));
    }
    let wants_equivalence = diag.equivalence || ctx.command == Command::Compare;
    if wants_equivalence && matches!(solver.scheme, Scheme::Nag | Scheme::Rag) && ctx.problem.nonsmooth.is_zero() {
        match nag_rag_equivalence_residual(&ctx.problem.smooth, cfg) {
            Ok(r) => {
                let tol = EQUIVALENCE_TOL * (1.0 + r.max_iterate_norm);
                let worst = r.nag_to_rag.max(r.rag_to_nag);
                verdicts.push(Verdict::new(
                    label,
                    "equivalence",
                    Status::from_bool(worst <= tol),
                    Some(worst),
                    Some(tol),
                    format!("nag->rag {:.3e}, rag->nag {:.3e}", r.nag_to_rag, r.rag_to_nag),
                ));
                report.equivalence = Some(EquivalenceSummary {
                    nag_to_rag: r.nag_to_rag,
                    rag_to_nag: r.rag_to_nag,
                    max_iterate_norm: r.max_iterate_norm,
                });
            }
            Err(e) => verdicts.push(Verdict::new(
                label,
                "equivalence",
                Status::Fail,
                None,
                None,
                e.to_string(),
            )),
        }
    }

    let file = format!("{label}.csv");
    csv::write(&ctx.out_dir.join(&file), &csv::trace_csv(&trace, &extra))?;
    report.csv = Some(file);
    Ok(TaskOutput {
        run: RunReport::Solver(report),
        verdicts,
        runtime_error: false,
    })
}

#[allow(clippy::too_many_arguments)]
fn slope_verdicts(
    trace: &Trace<f64>,
    alpha: f64,
    mu: f64,
    step: f64,
    k_start: usize,
    last_k: usize,
    diag: &crate::config::DiagnosticsConfig,
    report: &mut SolverReport,
    verdicts: &mut Vec<Verdict>,
    label: &str,
) {
    let Some(gaps) = trace.gaps() else {
        verdicts.push(Verdict::skip(label, "rate_slope", "no reference minimum"));
        return;
    };
    let ks = trace.ks();
    if is_strongly_convex_scheme(trace.scheme) {
        let bound = 1.0 - 0.5 * (mu * step).sqrt();
        match geometric_rate(&ks, &gaps, k_start, last_k) {
            Ok(r) => {
                let ratio = r.slope.exp();
                report.geometric_ratio = Some(ratio);
                verdicts.push(Verdict::new(
                    label,
                    "geometric_ratio",
                    Status::from_bool(ratio <= bound),
                    Some(ratio),
                    Some(bound),
                    format!("per-iteration gap ratio over {} points", r.n_points),
                ));
            }
            Err(e) => verdicts.push(Verdict::skip(label, "geometric_ratio", e.to_string())),
        }
        return;
    }
    // plain schemes are the contrast row: their slope should stay above the bound
    let contrast = trace.scheme.ordering() == Ordering::Plain;
    let mut fit = |name: &str, window: (usize, usize), bound: f64| {
        let hi = window.1.min(last_k);
        let check = match (name, contrast) {
            ("main", true) => "contrast_slope",
            ("main", false) => "rate_slope",
            _ => "late_slope",
        };
        if hi <= window.0 {
            verdicts.push(Verdict::skip(
                label,
                check,
                format!("run ends at k = {last_k}, before the window"),
            ));
            return;
        }
        match rate_slope(&ks, &gaps, window.0, hi) {
            Ok(r) => {
                verdicts.push(Verdict::new(
                    label,
                    check,
                    Status::from_bool(if contrast { r.slope >= bound } else { r.slope <= bound }),
                    Some(r.slope),
                    Some(bound),
                    format!(
                        "log-log gap slope {} bound over k in [{}, {hi}], {} points, {} floor hits",
                        if contrast { ">=" } else { "<=" },
                        window.0,
                        r.n_points,
                        r.floor_hits
                    ),
                ));
                report.slopes.push(SlopeEntry {
                    window: name.to_string(),
                    fit: r,
                });
            }
            Err(e) => verdicts.push(Verdict::skip(label, check, e.to_string())),
        }
    };
    fit(
        "main",
        diag.slope_window,
        if contrast { CONTRAST_SLOPE_BOUND } else { SLOPE_BOUND },
    );
    if alpha > 3.0 && is_accelerated(trace.scheme) {
        fit("late", diag.late_window, LATE_SLOPE_BOUND);
    }
}

fn energy_verdict(
    ctx: &Context,
    trace: &mut Trace<f64>,
    solver: &PreparedSolver,
    report: &mut SolverReport,
    verdicts: &mut Vec<Verdict>,
) {
    let label = solver.label.as_str();
    let cfg = &solver.cfg;
    let kind = match solver.scheme {
        Scheme::Nag | Scheme::Fista => EnergyKind::Nag,
        Scheme::Rag => EnergyKind::Rag,
        _ => return,
    };
    let anchor = match (ctx.problem.nonsmooth.is_zero(), ctx.problem.smooth.minimizer()) {
        (true, Some(x)) => x.to_vec(),
        _ => {
            verdicts.push(Verdict::skip(
                label,
                "energy_monotone",
                "no known minimizer to anchor the energy",
            ));
            return;
        }
    };
    if !trace.has_iterates() {
        verdicts.push(Verdict::skip(label, "energy_monotone", "iterates not stored"));
        return;
    }
    let anchor_value = ctx.problem.value(&anchor);
    let (energy, from_k) = match kind {
        EnergyKind::Nag => (
            energy_nag(trace, &anchor, anchor_value, cfg.alpha, cfg.step),
            cfg.k_start,
        ),
        EnergyKind::Rag => {
            // k + 2 − α < 0 before k = α − 2
            let from = cfg.k_start.max((cfg.alpha - 2.0).ceil().max(0.0) as usize);
            (energy_rag(trace, &anchor, anchor_value, cfg.alpha, cfg.step), from)
        }
    };
    attach_energy(trace, &energy);
    let first = energy.iter().find(|e| e.k >= from_k).map_or(f64::NAN, |e| e.value);
    let rise = max_energy_increase(&energy, from_k);
    report.energy = Some(EnergySummary {
        kind,
        from_k,
        first,
        max_increase: rise,
        count: energy.len(),
    });
    let sl = report.step_lipschitz;
    let covered = cfg.alpha >= 3.0
        && match kind {
            EnergyKind::Nag => sl <= 1.0 + 8.0 * f64::EPSILON,
            EnergyKind::Rag => sl < 1.0,
        };
    if !covered {
        verdicts.push(Verdict::skip(
            label,
            "energy_monotone",
            format!(
                "monotonicity needs alpha >= 3 and sL within range (alpha {}, sL {sl})",
                cfg.alpha
            ),
        ));
        return;
    }
    verdicts.push(Verdict::new(
        label,
        "energy_monotone",
        Status::from_bool(is_nonincreasing(&energy, from_k, ENERGY_SLACK)),
        Some(rise),
        Some(ENERGY_SLACK * first.abs()),
        format!("max E_(k+1) - E_k for k >= {from_k}"),
    ));
}

fn summability_verdicts(
    trace: &Trace<f64>,
    solver: &PreparedSolver,
    extra: &ExtraColumns,
    report: &mut SolverReport,
    verdicts: &mut Vec<Verdict>,
) {
    let label = solver.label.as_str();
    let ks = trace.ks();
    let cases = [
        (SumWeight::K2Gradsq, "summability_k2_grad2", &extra.sum_k2_grad2, 3.0),
        (
            SumWeight::KGap,
            "summability_k_gap",
            &extra.sum_k_gap,
            3.0 + f64::EPSILON,
        ),
    ];
    for (weight, check, sums, min_alpha) in cases {
        let Some(sums) = sums else {
            verdicts.push(Verdict::skip(label, check, "no reference minimum"));
            continue;
        };
        let Some(tc) = tail_check(&ks, sums, TAIL_RATIO) else {
            verdicts.push(Verdict::skip(label, check, "trace too short for a tail check"));
            continue;
        };
        let ratio = if tc.s_k > 0.0 { (tc.s_2k - tc.s_k) / tc.s_k } else { 0.0 };
        report.summability.push(TailEntry {
            weight,
            k: tc.k,
            s_k: tc.s_k,
            s_2k: tc.s_2k,
            tail_ratio: ratio,
        });
        if !is_accelerated(solver.scheme) || solver.cfg.alpha < min_alpha {
            verdicts.push(Verdict::skip(
                label,
                check,
                format!(
                    "summability is only claimed for accelerated schemes with alpha >= {}",
                    if weight == SumWeight::KGap { "3 (strictly)" } else { "3" }
                ),
            ));
            continue;
        }
        verdicts.push(Verdict::new(
            label,
            check,
            Status::from_bool(tc.passes),
            Some(ratio),
            Some(TAIL_RATIO),
            format!("(S_2K - S_K)/S_K at K = {}", tc.k),
        ));
    }
}

fn min_grad_verdict(
    trace: &Trace<f64>,
    solver: &PreparedSolver,
    last_k: usize,
    report: &mut SolverReport,
    verdicts: &mut Vec<Verdict>,
) {
    let label = solver.label.as_str();
    let stat = min_grad_statistic(trace);
    let Some(&(_, at_100)) = stat.iter().find(|(k, _)| *k == 100) else {
        verdicts.push(Verdict::skip(label, "min_grad_rate", "run ends before k = 100"));
        return;
    };
    let max = min_grad_rate(trace, 100, last_k);
    report.min_grad = Some(MinGradSummary {
        at_100,
        max,
        window: (100, last_k),
    });
    if !is_accelerated(solver.scheme) {
        verdicts.push(Verdict::skip(
            label,
            "min_grad_rate",
            "only claimed for accelerated schemes",
        ));
        return;
    }
    verdicts.push(Verdict::new(
        label,
        "min_grad_rate",
        Status::from_bool(max <= MIN_GRAD_GROWTH * at_100),
        Some(max),
        Some(MIN_GRAD_GROWTH * at_100),
        format!("max k^3 min |grad|^2 over k in [100, {last_k}]"),
    ));
}

fn run_ode(ctx: &Context, ode: &PreparedOde) -> Result<TaskOutput, CliError> {
    let label = ode.label.as_str();
    let spec = &ode.spec;
    let mut report = OdeReport {
        label: label.to_string(),
        ode: spec.kind,
        csv: None,
        status: RunStatus::Ok,
        error: None,
        alpha: spec.alpha,
        beta: spec.beta,
        gamma: spec.gamma,
        s: spec.s,
        mu: spec.mu,
        t0: spec.t0,
        t_end: ode.t_end,
        dt: ode.dt,
        samples: 0,
        final_value: None,
        oscillations: None,
        exp_rate: None,
    };
    let mut verdicts = Vec::new();
    let run = match integrate(&ctx.problem.smooth, spec, ode.t_end, ode.dt) {
        Ok(r) => r,
        Err(e) => {
            let diverged = matches!(e, ravine_core::dynamics::DynamicsError::Diverged { .. });
            report.status = if diverged {
                RunStatus::Diverged
            } else {
                RunStatus::Error
            };
            report.error = Some(e.to_string());
            verdicts.push(Verdict::new(
                label,
                "completed",
                Status::Fail,
                None,
                None,
                e.to_string(),
            ));
            return Ok(TaskOutput {
                run: RunReport::Ode(report),
                verdicts,
                runtime_error: !diverged,
            });
        }
    };
    verdicts.push(Verdict::new(
        label,
        "completed",
        Status::Pass,
        Some(run.len() as f64),
        None,
        format!("{} samples", run.len()),
    ));
    report.samples = run.len();
    report.final_value = run.objective.last().copied();
    report.oscillations = Some(count_oscillations(&run.objective));
    if spec.kind == OdeKind::HbfSc {
        let bound = -spec.mu.sqrt() + EXP_RATE_SLACK;
        match ctx.problem.smooth.min_value() {
            Some(f_star) => match exponential_rate(&run.times, &run.gaps(f_star), spec.t0, ode.t_end) {
                Ok(r) => {
                    verdicts.push(Verdict::new(
                        label,
                        "exp_rate",
                        Status::from_bool(r.slope <= bound),
                        Some(r.slope),
                        Some(bound),
                        format!("slope of ln(f - f*) per unit time, {} points", r.n_points),
                    ));
                    report.exp_rate = Some(r);
                }
                Err(e) => verdicts.push(Verdict::skip(label, "exp_rate", e.to_string())),
            },
            None => verdicts.push(Verdict::skip(label, "exp_rate", "no known minimum")),
        }
    }
    let file = format!("{label}.csv");
    csv::write(&ctx.out_dir.join(&file), &csv::ode_csv(&run))?;
    report.csv = Some(file);
    Ok(TaskOutput {
        run: RunReport::Ode(report),
        verdicts,
        runtime_error: false,
    })
}

fn run_resolution(ctx: &Context, which: GapTarget) -> Result<TaskOutput, CliError> {
    let r = ctx
        .config
        .resolution
        .as_ref()
        .expect("resolution task without a resolution block");
    let name = match which {
        GapTarget::Nag => "nag",
        GapTarget::Rag => "rag",
    };
    let label = format!("resolution_{name}");
    let x_init = r.x_init.clone().unwrap_or_else(|| vec![1.0; ctx.problem.dim()]);
    let mut report = ResolutionReport {
        label: label.clone(),
        which,
        csv: RESOLUTION_CSV.to_string(),
        alpha: r.alpha,
        horizon: r.horizon,
        rows: Vec::new(),
        error: None,
    };
    let mut verdicts = Vec::new();
    for &s in &r.steps {
        let setup = ResolutionSetup::new(r.alpha, s, r.horizon, which, x_init.clone());
        match resolution_gap(&ctx.problem.smooth, &setup) {
            Ok(gap) => {
                verdicts.push(Verdict::new(
                    &label,
                    "resolution_order",
                    Status::from_bool(gap.highres_err < gap.lowres_err),
                    Some(gap.highres_err),
                    Some(gap.lowres_err),
                    format!("highres_err below lowres_err at s = {s}"),
                ));
                report.rows.push(ResolutionRow {
                    s,
                    lowres_err: gap.lowres_err,
                    highres_err: gap.highres_err,
                });
            }
            Err(e) => {
                report.error = Some(e.to_string());
                verdicts.push(Verdict::new(
                    &label,
                    "resolution_order",
                    Status::Fail,
                    None,
                    None,
                    format!("s = {s}: {e}"),
                ));
                return Ok(TaskOutput {
                    run: RunReport::Resolution(report),
                    verdicts,
                    runtime_error: true,
                });
            }
        }
    }
    if let (Some(first), Some(last)) = (report.rows.first(), report.rows.last()) {
        if report.rows.len() >= 2 && last.s < first.s {
            let low = first.lowres_err / last.lowres_err;
            let high = first.highres_err / last.highres_err;
            verdicts.push(Verdict::new(
                &label,
                "resolution_contraction",
                Status::from_bool(high >= RESOLUTION_CONTRACTION * low),
                Some(high),
                Some(RESOLUTION_CONTRACTION * low),
                format!(
                    "highres contraction {high:.3}x vs lowres {low:.3}x from s = {} to {}",
                    first.s, last.s
                ),
            ));
        }
    }
    Ok(TaskOutput {
        run: RunReport::Resolution(report),
        verdicts,
        runtime_error: false,
    })
}

/// IGAHD with `β > 0` against the NAG run sharing its `α`, step and budget.
fn compare_verdicts(runs: &[SolverReport]) -> Vec<Verdict> {
    let mut out = Vec::new();
    for igahd in runs.iter().filter(|r| r.scheme == Scheme::Igahd && r.beta > 0.0) {
        let nag = runs.iter().find(|r| {
            r.scheme == Scheme::Nag && r.alpha == igahd.alpha && r.step == igahd.step && r.max_iter == igahd.max_iter
        });
        let Some(nag) = nag else { continue };
        let check = format!("oscillations {} < {}", igahd.label, nag.label);
        match (igahd.oscillations, nag.oscillations) {
            (Some(a), Some(b)) => out.push(Verdict::new(
                "compare",
                &check,
                Status::from_bool(a < b),
                Some(a as f64),
                Some(b as f64),
                "objective local maxima".into(),
            )),
            _ => out.push(Verdict::new(
                "compare",
                &check,
                Status::Fail,
                None,
                None,
                "a run did not complete".into(),
            )),
        }
    }
    out
}

/// DIN-AVD with `β > 0` against the AVD run sharing its `α`, time span and step.
fn ode_cross_verdicts(runs: &[OdeReport]) -> Vec<Verdict> {
    let mut out = Vec::new();
    for din in runs.iter().filter(|r| r.ode == OdeKind::DinAvd && r.beta > 0.0) {
        let avd = runs.iter().find(|r| {
            r.ode == OdeKind::Avd && r.alpha == din.alpha && r.t0 == din.t0 && r.t_end == din.t_end && r.dt == din.dt
        });
        let Some(avd) = avd else { continue };
        let check = format!("oscillations {} < {}", din.label, avd.label);
        match (din.oscillations, avd.oscillations) {
            (Some(a), Some(b)) => out.push(Verdict::new(
                "compare",
                &check,
                Status::from_bool(a < b),
                Some(a as f64),
                Some(b as f64),
                "objective local maxima".into(),
            )),
            _ => out.push(Verdict::new(
                "compare",
                &check,
                Status::Fail,
                None,
                None,
                "a run did not complete".into(),
            )),
        }
    }
    out
}

/// Side-by-side text table of the solver runs.
pub fn comparison_table(report: &Report) -> String {
    use std::fmt::Write as _;
    let mut out = format!(
        "{:<16} {:<12} {:>10} {:>10} {:>12} {:>6} {:>24}\n",
        "label", "scheme", "slope", "late", "max dE", "osc", "final gap"
    );
    let num = |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"));
    let sci = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
    for run in &report.runs {
        let RunReport::Solver(s) = run else { continue };
        let slope = |w: &str| s.slopes.iter().find(|e| e.window == w).map(|e| e.fit.slope);
        let _ = writeln!(
            out,
            "{:<16} {:<12} {:>10} {:>10} {:>12} {:>6} {:>24}",
            s.label,
            s.scheme.name(),
            num(slope("main"), 3),
            num(slope("late"), 3),
            sci(s.energy.as_ref().map(|e| e.max_increase)),
            s.oscillations.map_or_else(|| "-".to_string(), |n| n.to_string()),
            sci(s.final_gap),
        );
    }
    out
}
