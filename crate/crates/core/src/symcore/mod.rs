//! Symbolic expression kernel over a natural jet chart.

mod compile;
mod expr;
mod jet;
mod linsolve;
mod parse;
mod poly;
mod symbol;
mod zero;

pub use compile::Compiled;
pub use expr::{DivisionByZero, EvalError, Expr};
pub use jet::{total_derivative, TotalDerivativeError};
pub use linsolve::{
    determinant, linear_system_of, mat_vec, rank, solve_linear, AuditNote, ExprMatrix, LinSolution,
    LinSolveError,
};
pub use parse::{coordinate_from_name, parse, parse_expr, ParseError};
pub use poly::{rat, Atom, Kernel, Monomial, Poly, Rational};
pub use symbol::{ChartError, ChartSpec, Coord, Symbol};
pub use zero::{zero_test, Witness, ZeroVerdict, SAMPLE_COUNT, SAMPLE_TOLERANCE};

/// Partial derivative of `e` with respect to `s`.
pub fn differentiate(e: &Expr, s: &Symbol) -> Expr {
    e.diff(s)
}
