//! Plain CSV writers for traces, ODE runs and resolution tables.
//!
//! Reals are printed with 17 significant digits so that files round-trip
//! exactly and are byte-identical across runs; missing values are empty.

use std::fmt::Write as _;
use std::path::Path;

use ravine_core::dynamics::{GapTarget, OdeRun, ResolutionGap};
use ravine_core::solvers::Trace;

use crate::error::CliError;

pub fn real(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn push_real(line: &mut String, v: f64) {
    line.push(',');
    line.push_str(&real(v));
}

/// Optional per-row columns appended after `E`.
#[derive(Debug, Default, Clone)]
pub struct ExtraColumns {
    pub sum_k2_grad2: Option<Vec<f64>>,
    pub sum_k_gap: Option<Vec<f64>>,
}

/// `k, <main>0.., <aux>0.., gap, grad_norm, step_norm, E[, sum_k2_grad2][, sum_k_gap]`;
/// iterate columns are dropped when the trace has none.
pub fn trace_csv(trace: &Trace<f64>, extra: &ExtraColumns) -> String {
    let (main, aux) = trace.scheme.symbols();
    let dim = trace.final_main.len();
    let iterates = trace.has_iterates();
    let mut out = String::from("k");
    if iterates {
        for sym in [main, aux] {
            for j in 0..dim {
                let _ = write!(out, ",{sym}{j}");
            }
        }
    }
    out.push_str(",gap,grad_norm,step_norm,E");
    if extra.sum_k2_grad2.is_some() {
        out.push_str(",sum_k2_grad2");
    }
    if extra.sum_k_gap.is_some() {
        out.push_str(",sum_k_gap");
    }
    out.push('\n');

    let gaps = trace.gaps();
    for (i, r) in trace.records.iter().enumerate() {
        let mut line = r.k.to_string();
        if iterates {
            for &v in r.main.iter().chain(&r.aux) {
                push_real(&mut line, v);
            }
        }
        push_real(&mut line, gaps.as_ref().map_or(f64::NAN, |g| g[i]));
        push_real(&mut line, r.grad_norm);
        push_real(&mut line, r.step_norm);
        push_real(&mut line, trace.energy.get(i).copied().unwrap_or(f64::NAN));
        for col in [&extra.sum_k2_grad2, &extra.sum_k_gap].into_iter().flatten() {
            push_real(&mut line, col[i]);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// `t, x0.., v0.., f`.
pub fn ode_csv(run: &OdeRun<f64>) -> String {
    let dim = run.states.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for sym in ["x", "v"] {
        for j in 0..dim {
            let _ = write!(out, ",{sym}{j}");
        }
    }
    out.push_str(",f\n");
    for i in 0..run.len() {
        let mut line = real(run.times[i]);
        for &v in run.states[i].iter().chain(&run.velocities[i]) {
            push_real(&mut line, v);
        }
        push_real(&mut line, run.objective[i]);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn resolution_csv(rows: &[(GapTarget, ResolutionGap)]) -> String {
    let mut out = String::from("which,s,lowres_err,highres_err\n");
    for (which, gap) in rows {
        let name = match which {
            GapTarget::Nag => "nag",
            GapTarget::Rag => "rag",
        };
        let _ = writeln!(
            out,
            "{name},{},{},{}",
            real(gap.s),
            real(gap.lowres_err),
            real(gap.highres_err)
        );
    }
    out
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::write(path, e))
}
