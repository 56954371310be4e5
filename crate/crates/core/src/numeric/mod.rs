//! Floating-point checks: grid sections, finite differences, residuals of
//! field equations, and integration of flat multivector fields.
//!
//! Stencils are central and second order; boundary nodes are trimmed.
//! Per-node work runs on rayon and is reduced in node order, so results
//! do not depend on the thread count.

mod fd;
mod grid;
mod integrate;
mod legendre;
mod residual;

pub use fd::{fd_check, FdCheck};
pub use grid::{Grid, GridSection};
pub use integrate::{integrate_flat, second_order_residual_grid, InitialData, Integration};
pub use legendre::legendre_invert_point;
pub use residual::{el_residual_grid, hdw_residual_grid, EquationResidual, ResidualReport};

use crate::symcore::{ChartSpec, Compiled, EvalError, Expr, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("section has no momentum arrays")]
    MissingMomenta,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("multivector field still has free parameters: {}", .0.join(", "))]
    NotConcrete(Vec<String>),
    #[error("connection is not flat: {0}")]
    NonFlat(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("sweep cross-consistency {max:e} exceeds tolerance {tol:e}")]
    CrossConsistency { max: f64, tol: f64 },
    #[error("grid file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("domain error during evaluation")]
    Domain,
}

/// Slot layout for compiled expressions at one node:
/// `x (m) | y (N) | v (N·m) | p (N·m) | w (N·m·m)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Slots {
    chart: ChartSpec,
}

impl Slots {
    pub(crate) fn new(chart: ChartSpec) -> Self {
        Slots { chart }
    }

    pub(crate) fn len(&self) -> usize {
        let ChartSpec { m, n } = self.chart;
        m + n + 2 * n * m + n * m * m
    }

    pub(crate) fn x(&self, mu: usize) -> usize {
        mu
    }

    pub(crate) fn y(&self, a: usize) -> usize {
        self.chart.m + a
    }

    pub(crate) fn v(&self, a: usize, mu: usize) -> usize {
        self.chart.m + self.chart.n + a * self.chart.m + mu
    }

    pub(crate) fn p(&self, a: usize, mu: usize) -> usize {
        let ChartSpec { m, n } = self.chart;
        m + n + n * m + a * m + mu
    }

    pub(crate) fn w(&self, a: usize, lo: usize, hi: usize) -> usize {
        let ChartSpec { m, n } = self.chart;
        m + n + 2 * n * m + (a * m + lo) * m + hi
    }

    pub(crate) fn of(&self, s: &Symbol) -> Option<usize> {
        if !self.chart.contains(s) {
            return None;
        }
        Some(match s {
            Symbol::X(mu) => self.x(*mu),
            Symbol::Y(a) => self.y(*a),
            Symbol::V { field, dir } => self.v(*field, *dir),
            Symbol::P { field, dir } => self.p(*field, *dir),
            Symbol::W { field, lo, hi } => self.w(*field, *lo, *hi),
            Symbol::Param(_) => return None,
        })
    }

    pub(crate) fn compile(&self, e: &Expr) -> Result<Compiled, NumericError> {
        Ok(Compiled::new(e, &|s| self.of(s))?)
    }
}

/// Deterministic max-abs / RMS reduction.
pub(crate) fn reduce(values: &[f64]) -> (f64, f64, usize) {
    let mut max = 0.0f64;
    let mut arg = 0;
    let mut sq = 0.0;
    for (i, v) in values.iter().enumerate() {
        let a = v.abs();
        if a > max || a.is_nan() {
            max = a;
            arg = i;
        }
        sq += v * v;
    }
    let rms = if values.is_empty() {
        0.0
    } else {
        (sq / values.len() as f64).sqrt()
    };
    (max, rms, arg)
}
