use crate::linalg::{dist, norm};
use crate::objective::SmoothProblem;
use crate::Scalar;

use super::{run_nag, run_rag, SolverConfig, SolverError};

/// Largest recursion residuals between the NAG and RAG sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceResidual<T> {
    /// NAG run, `w_k := x_{k+1}`, checked against the RAG recursion on its `y_k`.
    pub nag_to_rag: T,
    /// RAG run, `x_{k+1} := y_k − s∇f(y_k)`, checked against the NAG recursion.
    pub rag_to_nag: T,
    /// Largest iterate norm seen in either run, for relative tolerances.
    pub max_iterate_norm: T,
}

/// Cross-checks the two orderings through their recursions rather than by
/// matching independently started runs.
pub fn nag_rag_equivalence_residual<T: Scalar>(
    problem: &SmoothProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<EquivalenceResidual<T>, SolverError> {
    let cfg = cfg.clone().storing_iterates(true);
    let s = cfg.step;
    let coeff = |k: usize| T::one() - cfg.alpha / T::index(k);
    let mut max_norm = T::zero();

    // (i) w_k = x_{k+1} must satisfy w_k = y_k − s∇f(y_k) and
    //     y_{k+1} = w_k + (1 − α/(k+1))(w_k − w_{k−1})
    let nag = run_nag(problem, &cfg)?;
    let xs = nag.mains();
    let ys = nag.auxes();
    let mut nag_to_rag = T::zero();
    for i in 1..nag.len().saturating_sub(1) {
        let k = nag.records[i].k;
        let (w_prev, w, y, y_next) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
        let g = problem.gradient(y);
        let landing: Vec<T> = y.iter().zip(&g).map(|(&a, &b)| a - s * b).collect();
        let c = coeff(k + 1);
        let extrap: Vec<T> = w.iter().zip(w_prev).map(|(&a, &b)| a + c * (a - b)).collect();
        nag_to_rag = nag_to_rag.max(dist(&landing, w)).max(dist(&extrap, y_next));
        max_norm = max_norm.max(norm(y)).max(norm(w));
    }

    // (ii) x_{k+1} := w_k must satisfy y_k = x_k + (1 − α/k)(x_k − x_{k−1})
    let rag = run_rag(problem, &cfg)?;
    let ys = rag.mains();
    let ws = rag.auxes();
    let mut rag_to_nag = T::zero();
    for i in 2..rag.len() {
        let k = rag.records[i].k;
        // x_k = w_{k−1}, x_{k−1} = w_{k−2}
        let (x, x_prev, y) = (ws[i - 1], ws[i - 2], ys[i]);
        let c = coeff(k);
        let extrap: Vec<T> = x.iter().zip(x_prev).map(|(&a, &b)| a + c * (a - b)).collect();
        let g = problem.gradient(y);
        let landing: Vec<T> = y.iter().zip(&g).map(|(&a, &b)| a - s * b).collect();
        rag_to_nag = rag_to_nag.max(dist(&extrap, y)).max(dist(&landing, ws[i]));
        max_norm = max_norm.max(norm(y)).max(norm(x));
    }

    Ok(EquivalenceResidual {
        nag_to_rag,
        rag_to_nag,
        max_iterate_norm: max_norm,
    })
}
