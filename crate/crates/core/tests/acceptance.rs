//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use ravine_core::diagnostics::*;
use ravine_core::dynamics::*;
use ravine_core::linalg::Matrix;
use ravine_core::objective::*;
use ravine_core::prox::*;
use ravine_core::random::{gaussian_vec, seeded};
use ravine_core::solvers::*;

const ITERS: usize = 10_000;

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }

    fn error(&mut self, what: &str, err: impl std::fmt::Display) {
        self.pass = false;
        self.lines.push(format!("FAIL {what}: {err}"));
    }
}

fn half_square() -> SmoothProblem<f64> {
    make_quadratic(QuadraticSpec::new(Matrix::from_diagonal(&[1.0]), vec![0.0])).unwrap()
}

fn ill() -> SmoothProblem<f64> {
    make_ill_conditioned_2d(100.0).unwrap()
}

fn lasso() -> CompositeProblem<f64> {
    random_lasso::<f64>(&LassoSpec::default()).unwrap()
}

fn power_law() -> SmoothProblem<f64> {
    power_law_quadratic(200, 1e-8, 0.2).unwrap()
}

fn equivalence(out: &mut Outcome) {
    let f = random_psd_quadratic::<f64>(10, 100.0, 11).unwrap();
    let s = 1.0 / f.lipschitz();
    let x0 = gaussian_vec(&mut seeded(12), 10);
    for alpha in [3.0, 3.5, 5.0] {
        let cfg = SolverConfig::new(x0.clone(), alpha, s, 500);
        match nag_rag_equivalence_residual(&f, &cfg) {
            Ok(r) => {
                let tol = 1e-11 * (1.0 + r.max_iterate_norm);
                let worst = r.nag_to_rag.max(r.rag_to_nag);
                out.check(
                    worst <= tol,
                    format!(
                        "alpha={alpha}: nag->rag {:.2e}, rag->nag {:.2e} <= {tol:.2e}",
                        r.nag_to_rag, r.rag_to_nag
                    ),
                );
            }
            Err(e) => out.error(&format!("alpha={alpha}"), e),
        }
    }
}

fn lyapunov(out: &mut Outcome) {
    let problems = [("cond100", ill()), ("lasso_smooth", lasso().smooth)];
    for (name, f) in problems {
        let (Some(xstar), Some(fstar)) = (f.minimizer().map(<[f64]>::to_vec), f.min_value()) else {
            out.error(name, "no known minimizer");
            continue;
        };
        let s = 0.9 / f.lipschitz();
        let x0 = vec![1.0; f.dim()];
        for alpha in [3.0, 4.0] {
            let cfg = SolverConfig::new(x0.clone(), alpha, s, ITERS);
            let runs = (run_nag(&f, &cfg), run_rag(&f, &cfg));
            let (Ok(nag), Ok(rag)) = runs else {
                out.error(&format!("{name} alpha={alpha}"), "solver error");
                continue;
            };
            let e_nag = energy_nag(&nag, &xstar, fstar, alpha, s);
            // the E_rag weight k + 2 − α is negative before k = α − 2
            let rag_from = (alpha - 2.0).ceil().max(1.0) as usize;
            let e_rag = energy_rag(&rag, &xstar, fstar, alpha, s);
            for (label, e, from) in [("E_nag", &e_nag, 1), ("E_rag", &e_rag, rag_from)] {
                let rise = max_energy_increase(e, from);
                let first = e.iter().find(|r| r.k >= from).map_or(0.0, |r| r.value);
                out.check(
                    is_nonincreasing(e, from, 1e-10),
                    format!("{label} {name} alpha={alpha} k>={from}: max rise {rise:.2e} <= 1e-10*{first:.3e}"),
                );
            }
        }
    }
}

fn slope_check(out: &mut Outcome, label: &str, trace: &Trace<f64>, window: (usize, usize), bound: f64, below: bool) {
    let Some(gaps) = trace.gaps() else {
        out.error(label, "no reference minimum");
        return;
    };
    match rate_slope(&trace.ks(), &gaps, window.0, window.1) {
        Ok(r) => {
            let ok = if below { r.slope <= bound } else { r.slope >= bound };
            let op = if below { "<=" } else { ">=" };
            out.check(
                ok,
                format!(
                    "{label} k in [{}, {}]: slope {:.3} {op} {bound} ({} points, {} floor hits)",
                    window.0, window.1, r.slope, r.n_points, r.floor_hits
                ),
            );
        }
        Err(e) => out.error(label, e),
    }
}

fn rates(out: &mut Outcome) {
    let f = power_law();
    let x0 = vec![0.0; f.dim()];
    let s = 1.0 / f.lipschitz();
    let composite = lasso();
    let theta_min = match estimate_min(&composite, &vec![0.0; composite.dim()], MIN_ESTIMATE_BUDGET) {
        Ok(v) => v,
        Err(e) => return out.error("lasso reference minimum", e),
    };
    let ls = 1.0 / composite.lipschitz();
    let lasso_x0 = vec![0.0; composite.dim()];

    for (alpha, window, bound) in [(3.0, (100, ITERS), -1.8), (4.0, (1000, ITERS), -2.0)] {
        let cfg = SolverConfig::new(x0.clone(), alpha, s, ITERS).storing_iterates(false);
        let smooth: [(&str, Result<Trace<f64>, SolverError>); 3] = [
            ("nag", run_nag(&f, &cfg)),
            ("rag", run_rag(&f, &cfg)),
            ("igahd", run_igahd(&f, &cfg.clone().with_beta(1.0))),
        ];
        for (name, run) in smooth {
            match run {
                Ok(t) => slope_check(out, &format!("{name} power-law alpha={alpha}"), &t, window, bound, true),
                Err(e) => out.error(name, e),
            }
        }
        let lcfg = SolverConfig::new(lasso_x0.clone(), alpha, ls, ITERS).storing_iterates(false);
        for (name, run) in [
            ("fista_like", run_fista_like(&composite, &lcfg)),
            ("rapg", run_rapg(&composite, &lcfg)),
        ] {
            match run {
                Ok(t) => slope_check(
                    out,
                    &format!("{name} lasso alpha={alpha}"),
                    &t.with_f_star(theta_min),
                    window,
                    bound,
                    true,
                ),
                Err(e) => out.error(name, e),
            }
        }
    }
    let cfg = SolverConfig::new(x0, 3.0, s, ITERS).storing_iterates(false);
    match run_gd(&f, &cfg) {
        Ok(t) => slope_check(out, "gd power-law (contrast)", &t, (100, ITERS), -1.3, false),
        Err(e) => out.error("gd", e),
    }
}

fn summability_tails(out: &mut Outcome) {
    for (problem, f, x0) in [
        ("cond100", ill(), vec![1.0, 1.0]),
        ("power-law", power_law(), vec![0.0; 200]),
    ] {
        let s = 0.9 / f.lipschitz();
        let cases = [
            (3.0, SumWeight::K2Gradsq, "sum k^2 |grad|^2"),
            (4.0, SumWeight::KGap, "sum k gap"),
        ];
        for (alpha, weight, label) in cases {
            let cfg = SolverConfig::new(x0.clone(), alpha, s, ITERS).storing_iterates(false);
            for (name, run) in [("nag", run_nag(&f, &cfg)), ("rag", run_rag(&f, &cfg))] {
                let Ok(t) = run else {
                    out.error(name, "solver error");
                    continue;
                };
                let tail = summability(&t, weight).and_then(|p| tail_check(&t.ks(), &p, 0.2));
                match tail {
                    Some(tc) => out.check(
                        tc.passes && tc.k == 5000,
                        format!(
                            "{name} {problem} alpha={alpha} {label}: S_2K - S_K = {:.3e} <= 0.2 * S_K = {:.3e} at K={}",
                            tc.s_2k - tc.s_k,
                            0.2 * tc.s_k,
                            tc.k
                        ),
                    ),
                    None => out.error(&format!("{name} {label}"), "tail unavailable"),
                }
            }
        }
    }
}

fn min_gradient(out: &mut Outcome) {
    for (problem, f, x0) in [
        ("cond100", ill(), vec![1.0, 1.0]),
        ("power-law", power_law(), vec![0.0; 200]),
    ] {
        let cfg = SolverConfig::new(x0, 3.0, 0.9 / f.lipschitz(), ITERS).storing_iterates(false);
        for (name, run) in [("nag", run_nag(&f, &cfg)), ("rag", run_rag(&f, &cfg))] {
            let Ok(t) = run else {
                out.error(name, "solver error");
                continue;
            };
            let stat = min_grad_statistic(&t);
            let at100 = stat.iter().find(|(k, _)| *k == 100).map_or(f64::NAN, |p| p.1);
            let peak = min_grad_rate(&t, 100, ITERS);
            out.check(
                peak <= 10.0 * at100,
                format!("{name} {problem}: max k^3 min|grad|^2 on [100, 1e4] = {peak:.3e} <= 10 * {at100:.3e}"),
            );
        }
    }
}

fn oscillations(out: &mut Outcome) {
    let f = ill();
    let s = 1.0 / f.lipschitz();
    // β = 1 exceeds 2√s here, so the range check is bypassed
    let cfg = SolverConfig::new(vec![1.0, 1.0], 3.1, s, 2000);
    match (
        run_nag(&f, &cfg),
        run_igahd(&f, &cfg.clone().with_beta(1.0).forced(true)),
    ) {
        (Ok(nag), Ok(igahd)) => {
            let (a, b) = (
                count_oscillations(&igahd.objective()),
                count_oscillations(&nag.objective()),
            );
            out.check(
                a < b,
                format!("igahd(beta=1) {a} < nag {b} local maxima over 2000 iterations"),
            );
        }
        _ => out.error("igahd vs nag", "solver error"),
    }
    let avd = OdeSpec::new(OdeKind::Avd, vec![1.0, 1.0]).with_alpha(3.1);
    let din = OdeSpec::new(OdeKind::DinAvd, vec![1.0, 1.0])
        .with_alpha(3.1)
        .with_beta(1.0);
    match (integrate(&f, &avd, 40.0, 1e-3), integrate(&f, &din, 40.0, 1e-3)) {
        (Ok(a), Ok(d)) => {
            let (cd, ca) = (count_oscillations(&d.objective), count_oscillations(&a.objective));
            out.check(
                cd < ca,
                format!("din_avd {cd} < avd {ca} local maxima over t in [1, 40]"),
            );
        }
        (Err(e), _) | (_, Err(e)) => out.error("din_avd vs avd", e),
    }
}

fn high_resolution(out: &mut Outcome) {
    let f = half_square();
    for which in [GapTarget::Nag, GapTarget::Rag] {
        let gaps: Result<Vec<ResolutionGap>, DynamicsError> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&s| resolution_gap(&f, &ResolutionSetup::new(3.0, s, 5.0, which, vec![1.0])))
            .collect();
        let gaps = match gaps {
            Ok(g) => g,
            Err(e) => {
                out.error(&format!("{which:?}"), e);
                continue;
            }
        };
        let (big, small) = (gaps[0], gaps[2]);
        out.check(
            big.highres_err < big.lowres_err,
            format!(
                "{which:?} s=1e-2: highres {:.3e} < lowres {:.3e}",
                big.highres_err, big.lowres_err
            ),
        );
        let low = big.lowres_err / small.lowres_err;
        let high = big.highres_err / small.highres_err;
        out.check(
            high >= 1.5 * low,
            format!("{which:?} s 1e-2 -> 2.5e-3: highres contraction {high:.2}x >= 1.5 * lowres {low:.2}x"),
        );
    }
}

fn strong_convexity(out: &mut Outcome) {
    let mu: f64 = 1.0;
    let spec = OdeSpec::new(OdeKind::HbfSc, vec![1.0]).with_mu(mu);
    match integrate(&half_square(), &spec, 20.0, 1e-2) {
        Ok(run) => match exponential_rate(&run.times, &run.gaps(0.0), 1.0, 20.0) {
            Ok(r) => out.check(
                r.slope <= -mu.sqrt() + 0.1,
                format!(
                    "hbf_sc log-gap slope {:.3} <= {:.1} per unit time",
                    r.slope,
                    -mu.sqrt() + 0.1
                ),
            ),
            Err(e) => out.error("hbf_sc fit", e),
        },
        Err(e) => out.error("hbf_sc", e),
    }
    let f = ill();
    let s = 1.0 / f.lipschitz();
    let bound = 1.0 - 0.5 * (mu * s).sqrt();
    let cfg = SolverConfig::new(vec![1.0, 1.0], 3.0, s, 1000)
        .with_mu(mu)
        .storing_iterates(false);
    for (name, variant) in [("sc_nesterov", ScVariant::Nesterov), ("sc_ravine", ScVariant::Ravine)] {
        let fit = run_sc(&f, &cfg, variant)
            .map_err(|e| e.to_string())
            .and_then(|t| geometric_rate(&t.ks(), &t.gaps().unwrap_or_default(), 1, 1000).map_err(|e| e.to_string()));
        match fit {
            Ok(r) => out.check(
                r.slope.exp() <= bound,
                format!(
                    "{name} per-iteration gap ratio {:.4} <= {bound:.4} ({} points)",
                    r.slope.exp(),
                    r.n_points
                ),
            ),
            Err(e) => out.error(name, e),
        }
    }
}

fn same_rows(a: &Trace<f64>, b: &Trace<f64>) -> bool {
    a.records == b.records && a.final_main == b.final_main && a.final_aux == b.final_aux
}

fn reductions(out: &mut Outcome) {
    let problems = [
        ("cond100", ill()),
        ("psd10", random_psd_quadratic(10, 50.0, 5).unwrap()),
    ];
    for (name, f) in problems {
        let x0 = gaussian_vec(&mut seeded(6), f.dim());
        let s = 1.0 / f.lipschitz();
        let cfg = SolverConfig::new(x0, 3.0, s, 500);
        let composite = CompositeProblem::from(f.clone());
        let pairs = [
            (
                "igahd(beta=0) = nag",
                run_igahd(&f, &cfg.clone().with_beta(0.0)),
                run_nag(&f, &cfg),
            ),
            ("rapg(g=0) = rag", run_rapg(&composite, &cfg), run_rag(&f, &cfg)),
            (
                "fista_like(g=0) = nag",
                run_fista_like(&composite, &cfg),
                run_nag(&f, &cfg),
            ),
            ("heavy_ball(m=0) = gd", run_heavy_ball(&f, &cfg, 0.0), run_gd(&f, &cfg)),
        ];
        for (label, a, b) in pairs {
            match (a, b) {
                (Ok(a), Ok(b)) => out.check(same_rows(&a, &b), format!("{label} bitwise on {name}")),
                (Err(e), _) | (_, Err(e)) => out.error(label, e),
            }
        }
    }
}

fn grid_argmin(g: &ProxFriendly<f64>, s: f64, y: f64) -> f64 {
    const POINTS: usize = 100_001;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..POINTS {
        let z = -10.0 + 20.0 * i as f64 / (POINTS - 1) as f64;
        let v = g.value(&[z]) + (z - y) * (z - y) / (2.0 * s);
        if v < best.0 {
            best = (v, z);
        }
    }
    best.1
}

fn oracles(out: &mut Outcome) {
    let proxes = [
        ("zero", prox_zero()),
        ("l1", prox_l1(1.0).unwrap()),
        ("box", prox_box(vec![-1.0], vec![2.5]).unwrap()),
    ];
    let mut rng = seeded(21);
    for (name, g) in &proxes {
        let draws = gaussian_vec(&mut rng, 40);
        let worst = draws
            .chunks(2)
            .map(|p| {
                let (s, y) = (0.05 + p[0].abs(), 3.0 * p[1]);
                (g.prox(s, &[y])[0] - grid_argmin(g, s, y)).abs()
            })
            .fold(0.0, f64::max);
        out.check(
            worst <= 1e-4,
            format!("prox {name}: max |prox - grid argmin| {worst:.2e} <= 1e-4 over 20 draws"),
        );
    }

    let builtins = [
        ("cond100", ill()),
        ("psd10", random_psd_quadratic(10, 100.0, 7).unwrap()),
        ("power_law", power_law_quadratic(50, 1e-6, 0.2).unwrap()),
        ("lasso_smooth", lasso().smooth),
        ("zero", zero_problem(3)),
    ];
    for (name, f) in &builtins {
        let mut rng = seeded(31);
        let worst = (0..10)
            .map(|_| {
                let x = gaussian_vec(&mut rng, f.dim());
                check_gradient(f, &x, 1e-6).unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max);
        out.check(worst <= 1e-5, format!("check_gradient {name}: {worst:.2e} <= 1e-5"));
    }

    let composites = [
        ("lasso", lasso()),
        (
            "box_cond100",
            CompositeProblem::new(ill(), prox_box(vec![0.5, -1.0], vec![2.0, 1.0]).unwrap()).unwrap(),
        ),
        (
            "l1_cond100",
            CompositeProblem::new(ill(), prox_l1(2.0).unwrap()).unwrap(),
        ),
    ];
    for (name, p) in &composites {
        let s = 1.0 / p.lipschitz();
        let mut rng = seeded(17);
        let worst = (0..100)
            .map(|_| {
                let x = gaussian_vec(&mut rng, p.dim());
                let y = gaussian_vec(&mut rng, p.dim());
                composite_descent_gap(p, s, &x, &y)
            })
            .fold(f64::INFINITY, f64::min);
        out.check(
            worst >= -1e-10,
            format!("descent gap {name}: min {worst:.3e} >= -1e-10 over 100 pairs"),
        );
    }
}

type Criterion = (&'static str, fn(&mut Outcome));

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("equivalence", equivalence),
        ("lyapunov monotonicity", lyapunov),
        ("O(1/k^2) rate", rates),
        ("gradient summability", summability_tails),
        ("min-gradient rate", min_gradient),
        ("oscillation attenuation", oscillations),
        ("high-resolution fidelity", high_resolution),
        ("strong convexity", strong_convexity),
        ("reductions", reductions),
        ("oracles", oracles),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let mut out = Outcome::new();
        run(&mut out);
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {} {name} ({:.1}s)",
            i + 1,
            started.elapsed().as_secs_f64()
        );
        for line in &out.lines {
            println!("    {line}");
        }
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
