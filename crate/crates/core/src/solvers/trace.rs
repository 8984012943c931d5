use crate::Scalar;

/// Which point plays the role of the main iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// `main = x_k`, `aux = y_k` (extrapolate, then step).
    Nesterov,
    /// `main = y_k`, `aux = w_k` (step, then extrapolate).
    Ravine,
    /// `main = x_k`, `aux = x_k + m(x_k − x_{k−1})`; gradient taken at `x_k`.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Nag,
    Rag,
    Igahd,
    Iprox,
    IproxFull,
    Rapg,
    Fista,
    ScProx,
    ScNesterov,
    ScRavine,
    Gd,
    Hb,
}

impl Scheme {
    pub const ALL: [Scheme; 12] = [
        Scheme::Nag,
        Scheme::Rag,
        Scheme::Igahd,
        Scheme::Iprox,
        Scheme::IproxFull,
        Scheme::Rapg,
        Scheme::Fista,
        Scheme::ScProx,
        Scheme::ScNesterov,
        Scheme::ScRavine,
        Scheme::Gd,
        Scheme::Hb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Nag => "nag",
            Scheme::Rag => "rag",
            Scheme::Igahd => "igahd",
            Scheme::Iprox => "iprox",
            Scheme::IproxFull => "iprox_full",
            Scheme::Rapg => "rapg",
            Scheme::Fista => "fista",
            Scheme::ScProx => "sc_prox",
            Scheme::ScNesterov => "sc_nesterov",
            Scheme::ScRavine => "sc_ravine",
            Scheme::Gd => "gd",
            Scheme::Hb => "hb",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn ordering(self) -> Ordering {
        match self {
            Scheme::Rag | Scheme::Rapg | Scheme::ScRavine => Ordering::Ravine,
            Scheme::Gd | Scheme::Hb => Ordering::Plain,
            _ => Ordering::Nesterov,
        }
    }

    /// Whether the objective gap is read at the auxiliary point (`θ(w_k)` for RAPG).
    pub fn gap_on_aux(self) -> bool {
        matches!(self, Scheme::Rapg)
    }

    /// Symbols of the (main, aux) points, used for column names.
    pub fn symbols(self) -> (&'static str, &'static str) {
        match self.ordering() {
            Ordering::Nesterov | Ordering::Plain => ("x", "y"),
            Ordering::Ravine => ("y", "w"),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of a trace, taken at iteration `k` before the step to `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<T> {
    pub k: usize,
    /// Main iterate; empty unless iterates are stored.
    pub main: Vec<T>,
    /// Auxiliary point; empty unless iterates are stored.
    pub aux: Vec<T>,
    /// `θ(main)`.
    pub value: T,
    /// `θ(aux)`; `+∞` when an indicator is violated.
    pub aux_value: T,
    /// `‖T_s(main)‖`, which is `‖∇f(main)‖` for smooth problems.
    pub grad_norm: T,
    pub aux_grad_norm: T,
    /// `‖main_k − main_{k−1}‖`.
    pub step_norm: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub scheme: Scheme,
    pub alpha: T,
    pub step: T,
    /// `min θ` used for gaps, when known.
    pub f_star: Option<T>,
    pub records: Vec<Record<T>>,
    /// Final main and auxiliary points, kept even when iterates are not stored.
    pub final_main: Vec<T>,
    pub final_aux: Vec<T>,
    /// Lyapunov energy per record, filled by the diagnostics.
    pub energy: Vec<T>,
}

impl<T: Scalar> Trace<T> {
    pub fn ordering(&self) -> Ordering {
        self.scheme.ordering()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn with_f_star(mut self, f_star: T) -> Self {
        self.f_star = Some(f_star);
        self
    }

    pub fn ks(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.k).collect()
    }

    /// Objective values at the point the scheme's rate is stated for.
    pub fn objective(&self) -> Vec<T> {
        let aux = self.scheme.gap_on_aux();
        self.records
            .iter()
            .map(|r| if aux { r.aux_value } else { r.value })
            .collect()
    }

    /// `objective − f*`, or `None` when `f*` is unknown.
    pub fn gaps(&self) -> Option<Vec<T>> {
        let f_star = self.f_star?;
        Some(self.objective().into_iter().map(|v| v - f_star).collect())
    }

    pub fn grad_norms(&self) -> Vec<T> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }

    pub fn step_norms(&self) -> Vec<T> {
        self.records.iter().map(|r| r.step_norm).collect()
    }

    pub fn mains(&self) -> Vec<&[T]> {
        self.records.iter().map(|r| r.main.as_slice()).collect()
    }

    pub fn auxes(&self) -> Vec<&[T]> {
        self.records.iter().map(|r| r.aux.as_slice()).collect()
    }

    pub fn has_iterates(&self) -> bool {
        self.records.first().is_some_and(|r| !r.main.is_empty())
    }

    pub fn last(&self) -> Option<&Record<T>> {
        self.records.last()
    }
}
